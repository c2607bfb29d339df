#pragma once

#include <string>
#include <vector>

namespace mrdo {

enum class Case { continuous, I, II, III, IV, V };

std::string to_string(Case c);
Case parse_case(const std::string& s);

struct DiscretizationScheme {
  Case case_tag = Case::III;
  double tau_g = 1.0;
  double tau_l = 1.0;
  int q_ratio = 1;        // case IV: tau_g = Q tau_l
  int k_ratio = 1;        // case V: tau_l = K tau_g
  double micro_step = 0;  // 0 selects min(positive tau, 1) / 100

  // Throws ConfigError naming the violated invariant.
  void validate() const;
  bool pure_discrete() const { return case_tag == Case::III || case_tag == Case::IV || case_tag == Case::V; }
  // Smallest positive sampling interval; 0 if both loops are continuous.
  double min_positive_tau() const;
  double effective_micro_step() const;
};

enum class GainKind { constant, one_over_sqrt_T, piecewise };

struct GainPiece {
  double t_start;
  double eta_g;
  double eta_l;
};

class GainSchedule {
 public:
  GainSchedule() = default;
  static GainSchedule constant(double eta_g, double eta_l);
  // eta_g stays fixed; eta_l = eta_l0 / sqrt(T).
  static GainSchedule one_over_sqrt_T(double eta_g, double eta_l0, double horizon);
  static GainSchedule piecewise(std::vector<GainPiece> pieces);

  GainKind kind() const { return kind_; }
  double eta_g(double t) const;
  double eta_l(double t) const;
  const std::vector<GainPiece>& pieces() const { return pieces_; }
  double base_eta_g() const { return eta_g_; }
  double base_eta_l() const { return eta_l_; }
  double horizon() const { return horizon_; }

  // Piecewise breakpoints must fall on sampling instants of discretized loops.
  void validate(const DiscretizationScheme& s) const;

 private:
  GainKind kind_ = GainKind::constant;
  double eta_g_ = 1.0;
  double eta_l_ = 1.0;
  double horizon_ = 0.0;
  std::vector<GainPiece> pieces_;
};

}  // namespace mrdo
