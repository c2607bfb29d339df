#pragma once

#include <vector>

#include "mrdo/linalg.hpp"

namespace mrdo {

// y = [x; v_1; ...; v_{blocks-1}] and z, each block N rows by d columns.
struct StackedState {
  int n_agents = 0;
  int blocks = 1;
  int z_blocks = 0;
  Mat y;
  Mat z;
  Mat held_ug;
  Mat held_uly;
  Mat held_ulz;
  double held_eta_g = 0.0;
  double held_eta_l = 0.0;
  double t = 0.0;
  long k = 0;  // micro ticks in integrated runs, iterations in discrete runs
  double last_sample_g = 0.0;
  double last_sample_l = 0.0;
  std::vector<Mat> aux;  // memory owned by native update rules

  auto x() { return y.topRows(n_agents); }
  auto x() const { return y.topRows(n_agents); }
  auto block(int b) { return y.middleRows(static_cast<Eigen::Index>(b) * n_agents, n_agents); }
  auto block(int b) const { return y.middleRows(static_cast<Eigen::Index>(b) * n_agents, n_agents); }
};

}  // namespace mrdo
