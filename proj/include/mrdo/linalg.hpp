#pragma once

#include <Eigen/Dense>

namespace mrdo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Stacked matrices hold `blocks` consecutive groups of n rows, one row per agent.
// These helpers apply R = 11^T/n (or I - R) to each group independently.

inline Mat block_average(const Mat& y, int n) {
  Mat out(y.rows(), y.cols());
  const int blocks = static_cast<int>(y.rows()) / n;
  for (int b = 0; b < blocks; ++b) {
    Eigen::RowVectorXd mean = y.middleRows(b * n, n).colwise().mean();
    out.middleRows(b * n, n).rowwise() = mean;
  }
  return out;
}

inline Mat consensus_error(const Mat& y, int n) { return y - block_average(y, n); }

inline double consensus_sq(const Mat& y, int n) { return consensus_error(y, n).squaredNorm(); }

}  // namespace mrdo
