#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mrdo/linalg.hpp"

namespace mrdo {

// f(x) = h/2 ||x - a||^2
struct Quadratic {
  double curvature;
  Vec target;
};

// f(x) = (1/m) sum_s softplus(-b_s a_s^T x) + sum_d beta*alpha*x_d^2 / (1 + alpha*x_d^2)
struct Logistic {
  Mat features;  // m x d
  Vec labels;    // +-1
  double alpha;
  double beta;
};

struct ValueGrad {
  double value;
  Vec grad;
};

class LocalObjective {
 public:
  explicit LocalObjective(Quadratic q);
  explicit LocalObjective(Logistic l);

  int dim() const { return dim_; }
  double lipschitz() const { return lipschitz_; }
  bool is_quadratic() const { return std::holds_alternative<Quadratic>(data_); }
  const Quadratic* quadratic() const { return std::get_if<Quadratic>(&data_); }
  const Logistic* logistic() const { return std::get_if<Logistic>(&data_); }

  ValueGrad value_grad(const Vec& x) const;
  double value(const Vec& x) const { return value_grad(x).value; }
  Vec gradient(const Vec& x) const;

 private:
  std::variant<Quadratic, Logistic> data_;
  int dim_;
  double lipschitz_;
};

inline ValueGrad local_value_grad(const LocalObjective& o, const Vec& x) { return o.value_grad(x); }

struct ObjectiveSuite {
  std::vector<LocalObjective> locals;
  int dim = 0;

  int n_agents() const { return static_cast<int>(locals.size()); }
  double lipschitz() const;
  // Mean of the local objectives at a common point.
  double average_value(const Vec& x) const;
  Vec average_gradient(const Vec& x) const;
};

ObjectiveSuite make_suite(std::vector<LocalObjective> locals);

struct StationarityReport {
  double grad_at_avg_sq;
  double consensus_sq;
  double gap;
};

// X is N x d, one row per agent.
StationarityReport stationarity_gap(const ObjectiveSuite& s, const Mat& X);

enum class ProblemKind { quadratic, logistic };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::logistic;
  int n = 20;
  int m = 500;
  int d = 10;
  double alpha = 1.0;
  double beta = 0.1;
  double heterogeneity = 1.0;
  std::uint64_t seed = 0;
  // Explicit quadratic instance; overrides generation when both are set.
  std::optional<std::vector<double>> curvatures;
  std::optional<std::vector<std::vector<double>>> targets;
};

ObjectiveSuite generate_synthetic(const ProblemSpec& spec);

}  // namespace mrdo
