#pragma once

#include <vector>

#include "mrdo/graph.hpp"
#include "mrdo/problem.hpp"
#include "mrdo/rng.hpp"
#include "mrdo/simulator.hpp"

namespace mrdo::testing {

inline ObjectiveSuite quadratics(std::vector<double> h, std::vector<std::vector<double>> a) {
  ProblemSpec p;
  p.kind = ProblemKind::quadratic;
  p.curvatures = std::move(h);
  p.targets = std::move(a);
  return generate_synthetic(p);
}

inline ObjectiveSuite logistic(int n, int m, int d, std::uint64_t seed, double het = 1.0) {
  ProblemSpec p;
  p.n = n;
  p.m = m;
  p.d = d;
  p.seed = seed;
  p.heterogeneity = het;
  return generate_synthetic(p);
}

inline Mat normal(int r, int c, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

inline RunSpec discrete(Case c, double tau_g, double tau_l, int q, int k, double eta_g, double eta_l, double horizon) {
  RunSpec s;
  s.scheme.case_tag = c;
  s.scheme.tau_g = tau_g;
  s.scheme.tau_l = tau_l;
  s.scheme.q_ratio = q;
  s.scheme.k_ratio = k;
  s.gains = GainSchedule::constant(eta_g, eta_l);
  s.horizon = horizon;
  return s;
}

inline RunSpec continuous(double eta_g, double eta_l, double horizon, double h) {
  RunSpec s;
  s.scheme.case_tag = Case::continuous;
  s.scheme.tau_g = s.scheme.tau_l = 0.0;
  s.scheme.micro_step = h;
  s.gains = GainSchedule::constant(eta_g, eta_l);
  s.horizon = horizon;
  s.mode = RunMode::controller;
  return s;
}

}  // namespace mrdo::testing
