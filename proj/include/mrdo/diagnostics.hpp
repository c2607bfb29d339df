#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "mrdo/controllers.hpp"
#include "mrdo/simulator.hpp"

namespace mrdo {

struct EnergyReading {
  double value;
  double objective_at_average;
  double consensus_half_sq;
};

// f(xbar) + 1/2 ||(I-R) y||^2 with f* omitted.
EnergyReading energy(const StackedState& s, const ObjectiveSuite& suite);

struct Measurement {
  EnergyReading energy;
  StationarityReport stationarity;
  double consensus_y_sq;
};

Measurement measure(const StackedState& s, const ObjectiveSuite& suite);

struct PropertyCertificate {
  std::string property;
  bool passed = false;
  double estimate = 0.0;
  double declared = 0.0;
  double worst_margin = 0.0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> extras;
  std::string note;
};

// Any linear-or-not operator on stacked (blocks*N x d) inputs.
struct OperatorUnderTest {
  std::function<Mat(const Mat&)> apply;
  int n_agents;
  int blocks;
  std::optional<Mat> matrix;
  double declared_c_g;
};

OperatorUnderTest as_operator(const GlobalController& g);

struct GcflCertificates {
  PropertyCertificate p1;
  PropertyCertificate p2;
};

GcflCertificates verify_gcfl(const OperatorUnderTest& op, int d, int n_samples, std::uint64_t seed);
inline GcflCertificates verify_gcfl(const GlobalController& g, int d, int n_samples, std::uint64_t seed) {
  return verify_gcfl(as_operator(g), d, n_samples, seed);
}

struct LcflConstantsEstimate {
  double alpha;
  double c_x;
  double c_v;
  double c_z;
  int n_samples;
};

// P4 ratios sampled along local gradient-flow trajectories x' = -u_x with (v, z)
// kept on the init-rule manifold.
LcflConstantsEstimate estimate_lcfl_constants(const LocalController& l, const ObjectiveSuite& suite, int n_samples,
                                              std::uint64_t seed);

struct LcflCertificates {
  PropertyCertificate p3;
  PropertyCertificate p4;
};

LcflCertificates verify_lcfl(const LocalController& l, const ObjectiveSuite& suite, int n_samples,
                             std::uint64_t seed);

// tol is an absolute allowance per recorded step. Window in trace time.
PropertyCertificate verify_energy_descent(const Trace& trace, double tol, double t_min = 0.0,
                                          double t_max = std::numeric_limits<double>::infinity());

struct RateEstimate {
  double slope;
  double intercept;
  double r_squared;
  double t_min;
  double t_max;
  int n_points;
};

RateEstimate fit_rate(const Trace& trace, double t_min, double t_max);

std::string to_json(const PropertyCertificate& c);

}  // namespace mrdo
