#include "mrdo/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "mrdo/errors.hpp"

namespace mrdo {

ContinuousRates dgt_rates(double c_g, double lipschitz_f) {
  return {c_g * c_g / (128.0 * lipschitz_f), c_g / 4.0, "dgt_case_study"};
}

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("bounds: ") + name + " must be positive");
}

void check_rates(const ContinuousRates& r) {
  require_positive(r.gamma1, "gamma1");
  require_positive(r.gamma2, "gamma2");
}

double min_gamma(const ContinuousRates& r, double N) { return std::min(N * r.gamma1, r.gamma2); }

// gamma~1^2 = min{N gamma1^2, gamma1 gamma2}, gamma~2^2 = min{gamma2^2, N gamma1 gamma2}
double gt1_sq(const ContinuousRates& r, double N) { return std::min(N * r.gamma1 * r.gamma1, r.gamma1 * r.gamma2); }
double gt2_sq(const ContinuousRates& r, double N) { return std::min(r.gamma2 * r.gamma2, N * r.gamma1 * r.gamma2); }

bool positive_rates(const DiscretizationBudget& b) { return b.gamma_hat1 > 0 && b.gamma_hat2 > 0; }

// Largest tau in (0, hi] with strictly positive rates, by bisection on a monotone
// predicate; returns 0 if none found.
double feasible_boundary(double hi, const std::function<bool(double)>& ok) {
  if (ok(hi)) return hi;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace

DiscretizationBudget case1_constants(const ContinuousRates& r, const BoundConstants& c, double tau_g) {
  DiscretizationBudget b;
  b.case_name = "I";
  const double growth = std::sqrt(c.c_x * c.c_x + c.c_v * c.c_v) * c.eta_l * std::pow(1.0 + c.L_f / c.N, 2);
  const double q_max = std::expm1(std::sqrt(2.0) * tau_g * growth);
  const double c11 = q_max * q_max / (2.0 * r.gamma2);
  b.max_tau_g = tau_g;
  b.constants = {{"q_max", q_max}, {"C_11", c11}};
  b.gamma_hat1 = r.gamma1 - c11;
  b.gamma_hat2 = r.gamma2 / 2.0 - c11;
  return b;
}

DiscretizationBudget case1_budget(const ContinuousRates& r, const BoundConstants& c, double safety) {
  check_rates(r);
  require_positive(c.eta_l, "eta_l");
  require_positive(c.N, "N");
  if (!(c.c_x + c.c_v > 0)) throw ConfigError("bounds: C_x + C_v must be positive");
  const double m = std::min(r.gamma2, std::sqrt(2.0 * r.gamma1 * r.gamma2));
  const double denom_tail = c.eta_l * std::pow(c.L_f / c.N + 1.0, 2);
  const double tau_closed = std::log1p(m) / (std::sqrt(2.0) * std::sqrt(c.c_x + c.c_v) * denom_tail);
  const double tau_exact =
      std::log1p(m) / (std::sqrt(2.0) * std::sqrt(c.c_x * c.c_x + c.c_v * c.c_v) * denom_tail);
  std::vector<std::string> warnings;
  if (std::abs(tau_closed - tau_exact) > 1e-12 * tau_exact) {
    std::ostringstream os;
    os << "closed-form tau_g uses sqrt(C_x + C_v) = " << tau_closed << "; q_max uses sqrt(C_x^2 + C_v^2), boundary "
       << tau_exact;
    warnings.push_back(os.str());
  }
  double tau = tau_closed;
  auto ok = [&](double t) { return positive_rates(case1_constants(r, c, t)); };
  if (!ok(tau)) {
    tau = safety * feasible_boundary(tau, ok);
    warnings.push_back("closed-form tau_g leaves a nonpositive effective rate; shrunk to " + std::to_string(tau));
  }
  DiscretizationBudget b = case1_constants(r, c, tau);
  if (!positive_rates(b)) throw InfeasibleError("bounds: inconsistent inputs (nonpositive gamma_hat at returned tau_g)");
  b.constants["tau_g_closed_form"] = tau_closed;
  b.constants["tau_g_q_max_boundary"] = tau_exact;
  b.warnings = std::move(warnings);
  return b;
}

DiscretizationBudget case2_constants(const ContinuousRates& r, const BoundConstants& c, double tau_l) {
  DiscretizationBudget b;
  b.case_name = "II";
  const double C_f = c.c_x * c.c_x + c.c_v * c.c_v + c.c_z * c.c_z;
  const double C_y = std::exp(-c.c_g * tau_l * c.eta_g);
  const double C_l = tau_l * c.eta_l / std::min(2.0 * c.c_g * c.eta_g, 1.0);
  const double den = 1.0 - 2.0 * c.L * c.L * C_l * C_l;
  if (!(den > 0)) throw InfeasibleError("bounds: infeasible, denominator 1 - 2 L^2 C_l^2 <= 0");
  const double L2 = c.L * c.L;
  const double mg = min_gamma(r, c.N);
  const double c21 = 4.0 * L2 * C_f * C_l * C_l * c.eta_l * c.eta_l / (2.0 * den * mg);
  const double c22 = L2 * c.eta_l * c.eta_l * ((1.0 - C_y) / (C_y * C_y) + 4.0 * c.L_f * c.L_f * C_f * C_l * C_l) /
                     (2.0 * den * mg);
  b.max_tau_l = tau_l;
  b.constants = {{"C_f", C_f}, {"C_y", C_y}, {"C_l", C_l}, {"C_21", c21}, {"C_22", c22}};
  b.gamma_hat1 = r.gamma1 / 2.0 - c21;
  b.gamma_hat2 = r.gamma2 / 2.0 - c22;
  return b;
}

DiscretizationBudget case2_budget(const ContinuousRates& r, const BoundConstants& c, double safety) {
  check_rates(r);
  require_positive(c.L, "L");
  require_positive(c.c_g, "C_g");
  require_positive(c.eta_l, "eta_l");
  require_positive(c.eta_g, "eta_g");
  const double C_f = c.c_x * c.c_x + c.c_v * c.c_v + c.c_z * c.c_z;
  const double g1 = std::sqrt(gt1_sq(r, c.N));
  const double g2 = std::sqrt(gt2_sq(r, c.N));
  const double first = g1 / (std::sqrt(2.0 * (g1 * g1 + 4.0 * C_f)) * c.L * c.eta_l * c.eta_l);
  const double second = std::log((g2 + 2.0 * c.L * c.eta_l) / (2.0 * c.L * c.eta_l)) / (c.c_g * c.eta_g);
  double tau = std::min(first, second);
  std::vector<std::string> warnings;
  auto ok = [&](double t) {
    try {
      return positive_rates(case2_constants(r, c, t));
    } catch (const InfeasibleError&) {
      return false;
    }
  };
  if (!ok(tau)) {
    tau = safety * feasible_boundary(tau, ok);
    warnings.push_back("closed-form tau_l leaves a nonpositive effective rate; shrunk to " + std::to_string(tau));
  }
  if (!(tau > 0)) throw InfeasibleError("bounds: infeasible, no tau_l with positive effective rates");
  DiscretizationBudget b = case2_constants(r, c, tau);
  b.constants["tau_l_closed_form"] = std::min(first, second);
  b.warnings = std::move(warnings);
  b.warnings.push_back("case V runs may reuse this tau_l bound only as a heuristic");
  return b;
}

DiscretizationBudget case34_constants(const ContinuousRates& r, const BoundConstants& c, double tau_g,
                                      double tau_l, int Q) {
  DiscretizationBudget b;
  b.case_name = "IV";
  const double eg2 = c.eta_g * c.eta_g;
  const double el2 = c.eta_l * c.eta_l;
  const double L2 = c.L * c.L;
  const double Lf2 = c.L_f * c.L_f;
  const double C_f = c.c_x * c.c_x + c.c_v * c.c_v + c.c_z * c.c_z;
  const double den_g = 1.0 - 4.0 * tau_g * tau_g * eg2;
  const double den_l = 1.0 - 4.0 * L2 * tau_l * tau_l * el2;
  if (!(den_g > 0)) throw InfeasibleError("bounds: infeasible, denominator 1 - 4 tau_g^2 eta_g^2 <= 0 (C_43, C_44)");
  if (!(den_l > 0)) throw InfeasibleError("bounds: infeasible, denominator 1 - 4 L^2 tau_l^2 eta_l^2 <= 0 (C_45, C_46)");
  const double c43 = 4.0 * tau_g * tau_g * eg2 / den_g;
  const double c44 = 2.0 * tau_l * tau_l * el2 / den_g;
  const double c45 = 4.0 * tau_l * tau_l * eg2 / den_l;
  const double c46 = 8.0 * L2 * C_f * tau_l * tau_l * el2 / den_l;
  const double c47 = static_cast<double>(Q) * Q * c44 * c44 * (c.c_x * c.c_x + c.c_v * c.c_v);
  const double mg = min_gamma(r, c.N);
  const double c41 = L2 * el2 * (c45 * (1.0 + Lf2 * c47 + c45) + c46 * Lf2) / (2.0 * mg) +
                     c.c_g * eg2 * (c43 + Lf2 * c47) / (2.0 * r.gamma2);
  const double c42 = L2 * el2 * (c46 + c45 * c47) / (2.0 * mg) + c.c_g * eg2 * c47 / (2.0 * r.gamma2);
  b.max_tau_g = tau_g;
  b.max_tau_l = tau_l;
  b.recommended_Q = Q;
  b.constants = {{"C_41", c41}, {"C_42", c42}, {"C_43", c43}, {"C_44", c44},
                 {"C_45", c45}, {"C_46", c46}, {"C_47", c47}, {"C_f", C_f}};
  b.gamma_hat1 = r.gamma1 / 2.0 - c41;
  b.gamma_hat2 = r.gamma2 / 2.0 - c42;
  b.warnings.push_back("C_44 evaluated with eta_l^2 in place of the duplicated tau_l^2 factor");
  return b;
}

DiscretizationBudget case34_budget(const ContinuousRates& r, const BoundConstants& c, std::optional<int> q_target,
                                   double safety) {
  check_rates(r);
  require_positive(c.L, "L");
  require_positive(c.eta_l, "eta_l");
  require_positive(c.eta_g, "eta_g");
  if (q_target && *q_target < 1) throw ConfigError("bounds: Q_target must be >= 1");
  const double L2 = c.L * c.L;
  const double c_sq_bound =
      std::min(0.25, std::min(gt1_sq(r, c.N), gt2_sq(r, c.N)) *
                         std::min(1.0 / (L2 * c.eta_l * c.eta_l * (1.0 + c.L_f * c.L_f)),
                                  1.0 / (c.c_g * c.eta_g * c.eta_g)));
  const int Q = q_target ? *q_target : std::max(1, static_cast<int>(std::lround(2.0 * c.L * c.eta_l / c.eta_g)));

  auto intervals = [&](double cc) {
    double tau_l = cc / (2.0 * c.L * c.eta_l);
    double tau_g = cc / (2.0 * c.eta_g);
    // Keep tau_g = Q tau_l by shrinking whichever side is too long.
    if (Q * tau_l <= tau_g)
      tau_g = Q * tau_l;
    else
      tau_l = tau_g / Q;
    return std::pair{tau_g, tau_l};
  };
  auto ok = [&](double cc) {
    auto [tg, tl] = intervals(cc);
    try {
      return positive_rates(case34_constants(r, c, tg, tl, Q));
    } catch (const InfeasibleError&) {
      return false;
    }
  };
  std::vector<std::string> warnings;
  double cc = safety * std::sqrt(c_sq_bound);
  if (!ok(cc)) {
    cc = safety * feasible_boundary(cc, ok);
    warnings.push_back("stepsize condition leaves a nonpositive effective rate; c shrunk to " + std::to_string(cc));
  }
  if (!(cc > 0)) throw InfeasibleError("bounds: infeasible, no stepsize c with positive effective rates");
  auto [tau_g, tau_l] = intervals(cc);
  DiscretizationBudget b = case34_constants(r, c, tau_g, tau_l, Q);
  b.case_name = Q == 1 ? "III" : "IV";
  b.constants["c"] = cc;
  b.constants["c_sq_bound"] = c_sq_bound;
  for (auto& w : warnings) b.warnings.push_back(std::move(w));
  return b;
}

std::string to_json(const DiscretizationBudget& b) {
  nlohmann::ordered_json j;
  j["case"] = b.case_name;
  j["max_tau_g"] = b.max_tau_g;
  j["max_tau_l"] = b.max_tau_l;
  j["Q"] = b.recommended_Q;
  j["constants"] = b.constants;
  j["gamma_hat"] = {b.gamma_hat1, b.gamma_hat2};
  j["warnings"] = b.warnings;
  return j.dump(2);
}

}  // namespace mrdo
