#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mrdo {

// Continuous-time descent rates, evaluated at representative (t = 0) gains.
struct ContinuousRates {
  double gamma1;
  double gamma2;
  std::string source = "user";
};

// gamma1 = C_g^2 / (128 L_f), gamma2 = C_g / 4.
ContinuousRates dgt_rates(double c_g, double lipschitz_f);

struct BoundConstants {
  double c_x = 0.0;
  double c_v = 0.0;
  double c_z = 0.0;
  double c_g = 0.0;
  double L = 0.0;
  double L_f = 0.0;
  double N = 1.0;
  double eta_l = 1.0;
  double eta_g = 1.0;
};

struct DiscretizationBudget {
  std::string case_name;
  double max_tau_g = 0.0;
  double max_tau_l = 0.0;
  int recommended_Q = 1;
  std::map<std::string, double> constants;
  double gamma_hat1 = 0.0;
  double gamma_hat2 = 0.0;
  std::vector<std::string> warnings;
};

// Constant evaluators at a given sampling interval. Each returns the constants and
// the effective rates; no feasibility error is raised except for nonpositive
// denominators.
DiscretizationBudget case1_constants(const ContinuousRates& r, const BoundConstants& c, double tau_g);
DiscretizationBudget case2_constants(const ContinuousRates& r, const BoundConstants& c, double tau_l);
DiscretizationBudget case34_constants(const ContinuousRates& r, const BoundConstants& c, double tau_g,
                                      double tau_l, int Q);

// Budgets. safety in (0, 1] scales the boundary when the closed-form bound leaves
// no strictly positive effective rate.
DiscretizationBudget case1_budget(const ContinuousRates& r, const BoundConstants& c, double safety = 0.9);
DiscretizationBudget case2_budget(const ContinuousRates& r, const BoundConstants& c, double safety = 0.9);
DiscretizationBudget case34_budget(const ContinuousRates& r, const BoundConstants& c,
                                   std::optional<int> q_target = std::nullopt, double safety = 0.9);

std::string to_json(const DiscretizationBudget& b);

}  // namespace mrdo
