#include "mrdo/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mrdo/diagnostics.hpp"
#include "mrdo/errors.hpp"
#include "mrdo/kernels.hpp"

namespace mrdo {

std::string to_string(Case c) {
  switch (c) {
    case Case::continuous: return "continuous";
    case Case::I: return "I";
    case Case::II: return "II";
    case Case::III: return "III";
    case Case::IV: return "IV";
    case Case::V: return "V";
  }
  return "?";
}

Case parse_case(const std::string& s) {
  if (s == "continuous") return Case::continuous;
  if (s == "I" || s == "1") return Case::I;
  if (s == "II" || s == "2") return Case::II;
  if (s == "III" || s == "3") return Case::III;
  if (s == "IV" || s == "4") return Case::IV;
  if (s == "V" || s == "5") return Case::V;
  throw ConfigError("scheme: unknown case '" + s + "'");
}

namespace {

constexpr double kGridTol = 1e-9;

bool near_integer_ratio(double a, double b, long& ratio) {
  const double r = a / b;
  ratio = std::lround(r);
  return ratio >= 1 && std::abs(r - static_cast<double>(ratio)) <= kGridTol * std::max(1.0, r);
}

bool rel_equal(double a, double b) { return std::abs(a - b) <= kGridTol * std::max(std::abs(a), std::abs(b)); }

}  // namespace

double DiscretizationScheme::min_positive_tau() const {
  if (tau_g > 0 && tau_l > 0) return std::min(tau_g, tau_l);
  return std::max(tau_g, tau_l);
}

double DiscretizationScheme::effective_micro_step() const {
  if (micro_step > 0) return micro_step;
  const double tau = min_positive_tau();
  return (tau > 0 ? std::min(tau, 1.0) : 1.0) / 100.0;
}

void DiscretizationScheme::validate() const {
  if (!(tau_g >= 0) || !(tau_l >= 0)) throw ConfigError("scheme: sampling intervals must be >= 0");
  switch (case_tag) {
    case Case::continuous:
      if (tau_g != 0 || tau_l != 0) throw ConfigError("scheme: continuous case requires tau_g = tau_l = 0");
      break;
    case Case::I:
      if (!(tau_g > 0) || tau_l != 0) throw ConfigError("scheme: case I requires tau_g > 0 and tau_l = 0");
      break;
    case Case::II:
      if (tau_g != 0 || !(tau_l > 0)) throw ConfigError("scheme: case II requires tau_g = 0 and tau_l > 0");
      break;
    case Case::III:
      if (!(tau_g > 0) || !rel_equal(tau_g, tau_l)) throw ConfigError("scheme: case III requires tau_g = tau_l > 0");
      break;
    case Case::IV: {
      if (!(tau_g > 0) || !(tau_l > 0)) throw ConfigError("scheme: case IV requires tau_g, tau_l > 0");
      if (q_ratio < 1) throw ConfigError("scheme: case IV requires integer Q >= 1");
      if (!rel_equal(tau_g, q_ratio * tau_l))
        throw ConfigError("scheme: case IV requires tau_g = Q * tau_l with integer Q >= 1 (tau_g >= tau_l)");
      break;
    }
    case Case::V: {
      if (!(tau_g > 0) || !(tau_l > 0)) throw ConfigError("scheme: case V requires tau_g, tau_l > 0");
      if (k_ratio < 1) throw ConfigError("scheme: case V requires integer K >= 1");
      if (!rel_equal(tau_l, k_ratio * tau_g))
        throw ConfigError("scheme: case V requires tau_l = K * tau_g with integer K >= 1 (tau_l >= tau_g)");
      break;
    }
  }
  if (micro_step < 0) throw ConfigError("scheme: micro step h must be > 0");
  if (!pure_discrete()) {
    const double h = effective_micro_step();
    const double tau = min_positive_tau();
    if (tau > 0 && h > tau / 10.0 * (1 + kGridTol))
      throw ConfigError("scheme: micro step h must be <= min positive sampling interval / 10");
    long r;
    if (tau_g > 0 && !near_integer_ratio(tau_g, h, r))
      throw ConfigError("scheme: tau_g must be an integer multiple of h (sampling grid)");
    if (tau_l > 0 && !near_integer_ratio(tau_l, h, r))
      throw ConfigError("scheme: tau_l must be an integer multiple of h (sampling grid)");
  }
}

GainSchedule GainSchedule::constant(double eta_g, double eta_l) {
  GainSchedule g;
  g.kind_ = GainKind::constant;
  g.eta_g_ = eta_g;
  g.eta_l_ = eta_l;
  if (eta_g < 0 || eta_l < 0) throw ConfigError("gains: eta must be nonnegative");
  return g;
}

GainSchedule GainSchedule::one_over_sqrt_T(double eta_g, double eta_l0, double horizon) {
  if (!(horizon > 0)) throw ConfigError("gains: one_over_sqrt_T needs a positive horizon");
  GainSchedule g = constant(eta_g, eta_l0);
  g.kind_ = GainKind::one_over_sqrt_T;
  g.horizon_ = horizon;
  return g;
}

GainSchedule GainSchedule::piecewise(std::vector<GainPiece> pieces) {
  if (pieces.empty() || pieces.front().t_start != 0.0) throw ConfigError("gains: piecewise schedule must start at t=0");
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].eta_g < 0 || pieces[i].eta_l < 0) throw ConfigError("gains: eta must be nonnegative");
    if (i > 0 && !(pieces[i].t_start > pieces[i - 1].t_start))
      throw ConfigError("gains: piecewise breakpoints must increase");
  }
  GainSchedule g;
  g.kind_ = GainKind::piecewise;
  g.pieces_ = std::move(pieces);
  g.eta_g_ = g.pieces_.front().eta_g;
  g.eta_l_ = g.pieces_.front().eta_l;
  return g;
}

namespace {

const GainPiece& piece_at(const std::vector<GainPiece>& pieces, double t) {
  std::size_t i = 0;
  while (i + 1 < pieces.size() && pieces[i + 1].t_start <= t + 1e-12) ++i;
  return pieces[i];
}

}  // namespace

double GainSchedule::eta_g(double t) const { return kind_ == GainKind::piecewise ? piece_at(pieces_, t).eta_g : eta_g_; }

double GainSchedule::eta_l(double t) const {
  switch (kind_) {
    case GainKind::constant: return eta_l_;
    case GainKind::one_over_sqrt_T: return eta_l_ / std::sqrt(horizon_);
    case GainKind::piecewise: return piece_at(pieces_, t).eta_l;
  }
  return eta_l_;
}

void GainSchedule::validate(const DiscretizationScheme& s) const {
  if (kind_ != GainKind::piecewise) return;
  const double base = s.pure_discrete() ? s.min_positive_tau() : 0.0;
  for (const auto& p : pieces_) {
    long r;
    for (double tau : {s.tau_g, s.tau_l, base}) {
      if (tau > 0 && p.t_start > 0 && !near_integer_ratio(p.t_start, tau, r))
        throw ConfigError("gains: piecewise breakpoint at t=" + std::to_string(p.t_start) +
                          " falls inside a sampling interval (gains must be constant between samples)");
    }
  }
}

bool uses_native(const AlgorithmDescriptor& desc, RunMode mode) {
  switch (mode) {
    case RunMode::native:
      if (!desc.native) throw ConfigError("simulator: " + desc.name + " has no native update rule");
      return true;
    case RunMode::controller:
      if (desc.native_only) throw ConfigError("simulator: " + desc.name + " runs only through its native update rule");
      return false;
    case RunMode::automatic:
      return desc.native_only;
  }
  return false;
}

namespace {

void sample_gcfl(StackedState& s, const AlgorithmDescriptor& desc, const GainSchedule& gains) {
  s.held_ug = desc.gcfl.apply(s.y);
  s.held_eta_g = gains.eta_g(s.t);
  s.last_sample_g = s.t;
}

void sample_lcfl(StackedState& s, const AlgorithmDescriptor& desc, const ObjectiveSuite& suite,
                 const GainSchedule& gains) {
  auto lo = local_outputs(desc.lcfl, suite, s.y, s.z, default_exec());
  s.held_uly = std::move(lo.uy);
  s.held_ulz = std::move(lo.uz);
  s.held_eta_l = gains.eta_l(s.t);
  s.last_sample_l = s.t;
}

}  // namespace

StackedState init_state(const AlgorithmDescriptor& desc, const ObjectiveSuite& suite, const Mat& x0,
                        const GainSchedule& gains, bool native) {
  const int n = suite.n_agents();
  if (x0.rows() != n || x0.cols() != suite.dim) throw ConfigError("simulator: x0 must be N x d");
  if (!x0.allFinite()) throw ConfigError("simulator: x0 must be finite");
  StackedState s;
  s.n_agents = n;
  s.blocks = desc.gcfl.blocks();
  s.z_blocks = desc.lcfl.z_blocks();
  if (desc.lcfl.y_blocks() != s.blocks)
    throw ConfigError("simulator: GCFL and LCFL disagree on the number of y blocks");
  s.y = Mat::Zero(static_cast<Eigen::Index>(s.blocks) * n, suite.dim);
  s.z = Mat::Zero(static_cast<Eigen::Index>(s.z_blocks) * n, suite.dim);
  s.x() = x0;

  if (native) {
    desc.native->init(s, suite);
    return s;
  }
  if (desc.lcfl.has_init_rule()) {
    for (int i = 0; i < n; ++i) {
      Mat v(s.blocks - 1, suite.dim), z(s.z_blocks, suite.dim);
      for (int b = 1; b < s.blocks; ++b) v.row(b - 1) = s.y.row(b * n + i);
      for (int b = 0; b < s.z_blocks; ++b) z.row(b) = s.z.row(b * n + i);
      desc.lcfl.init_rule(suite.locals[i], x0.row(i).transpose(), v, z);
      for (int b = 1; b < s.blocks; ++b) s.y.row(b * n + i) = v.row(b - 1);
      for (int b = 0; b < s.z_blocks; ++b) s.z.row(b * n + i) = z.row(b);
    }
  }
  for (auto [mem, src] : desc.gcfl.memory_pairs) s.block(mem) = s.block(src);
  sample_gcfl(s, desc, gains);
  sample_lcfl(s, desc, suite, gains);
  if (!desc.gcfl.persistent()) s.held_ug.setZero();
  return s;
}

void micro_step(StackedState& s, const AlgorithmDescriptor& desc, const ObjectiveSuite& suite,
                const DiscretizationScheme& scheme, const GainSchedule& gains) {
  const double h = scheme.effective_micro_step();
  const long n_g = scheme.tau_g > 0 ? std::lround(scheme.tau_g / h) : 0;
  const long n_l = scheme.tau_l > 0 ? std::lround(scheme.tau_l / h) : 0;
  const bool impulse = !desc.gcfl.persistent();
  if (impulse && n_g == 0) throw ConfigError("simulator: impulse GCFL needs tau_g > 0");

  if (n_l > 0 && s.k % n_l == 0) sample_lcfl(s, desc, suite, gains);
  if (n_g > 0 && s.k % n_g == 0) {
    if (impulse) {
      s.y -= desc.gcfl.apply(s.y);
      s.last_sample_g = s.t;
    } else {
      sample_gcfl(s, desc, gains);
    }
  }

  auto deriv = [&](const Mat& y, const Mat& z, double t, Mat& dy, Mat& dz) {
    dy.setZero(y.rows(), y.cols());
    dz.setZero(z.rows(), z.cols());
    if (!impulse) {
      if (n_g == 0)
        dy.noalias() -= gains.eta_g(t) * desc.gcfl.apply(y);
      else
        dy.noalias() -= s.held_eta_g * s.held_ug;
    }
    if (n_l == 0) {
      auto lo = local_outputs(desc.lcfl, suite, y, z, default_exec());
      const double el = gains.eta_l(t);
      dy.noalias() -= el * lo.uy;
      dz.noalias() -= el * lo.uz;
    } else {
      dy.noalias() -= s.held_eta_l * s.held_uly;
      dz.noalias() -= s.held_eta_l * s.held_ulz;
    }
  };

  Mat k1y, k1z, k2y, k2z, k3y, k3z, k4y, k4z;
  const double t = s.t;
  deriv(s.y, s.z, t, k1y, k1z);
  deriv(s.y + 0.5 * h * k1y, s.z + 0.5 * h * k1z, t + 0.5 * h, k2y, k2z);
  deriv(s.y + 0.5 * h * k2y, s.z + 0.5 * h * k2z, t + 0.5 * h, k3y, k3z);
  deriv(s.y + h * k3y, s.z + h * k3z, t + h, k4y, k4z);
  s.y += (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
  s.z += (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
  ++s.k;
  s.t = static_cast<double>(s.k) * h;
  if (!s.y.allFinite() || !s.z.allFinite()) throw DivergenceError("simulator: non-finite state", t);
}

void discrete_step(StackedState& s, const AlgorithmDescriptor& desc, const ObjectiveSuite& suite,
                   const DiscretizationScheme& scheme, const GainSchedule& gains, bool native) {
  if (!scheme.pure_discrete()) throw ConfigError("simulator: discrete_step needs case III, IV or V");
  const double delta = scheme.min_positive_tau();
  const double t_before = s.t;
  if (native) {
    const int period = scheme.case_tag == Case::IV ? scheme.q_ratio : scheme.case_tag == Case::V ? scheme.k_ratio : 1;
    desc.native->step(s, suite, s.k, period);
  } else {
    const long p_g = std::lround(scheme.tau_g / delta);
    const long p_l = std::lround(scheme.tau_l / delta);
    const bool fire_g = s.k % p_g == 0;
    const bool fire_l = s.k % p_l == 0;
    const bool impulse = !desc.gcfl.persistent();
    if (fire_l) sample_lcfl(s, desc, suite, gains);
    Mat jump;
    if (fire_g) {
      if (impulse) {
        jump = desc.gcfl.apply(s.y);
        s.last_sample_g = s.t;
      } else {
        sample_gcfl(s, desc, gains);
      }
    }
    s.y.noalias() -= (delta * s.held_eta_l) * s.held_uly;
    if (!impulse)
      s.y.noalias() -= (delta * s.held_eta_g) * s.held_ug;
    else if (fire_g)
      s.y -= jump;
    s.z.noalias() -= (delta * s.held_eta_l) * s.held_ulz;
  }
  ++s.k;
  s.t = static_cast<double>(s.k) * delta;
  if (!s.y.allFinite() || !s.z.allFinite()) throw DivergenceError("simulator: non-finite state", t_before);
}

Trace simulate(const AlgorithmDescriptor& desc, const ObjectiveSuite& suite, const Mat& x0, const RunSpec& spec,
               StackedState* final_state) {
  spec.scheme.validate();
  spec.gains.validate(spec.scheme);
  if (spec.record_stride < 1) throw ConfigError("run: record_stride must be >= 1");
  if (!(spec.horizon > 0)) throw ConfigError("run: horizon must be > 0");
  const bool native = uses_native(desc, spec.mode);
  const bool discrete = spec.scheme.pure_discrete();
  if (native && !discrete) throw ConfigError("run: native update rules need a case III, IV or V scheme");
  if (!desc.gcfl.persistent() && spec.scheme.tau_g <= 0)
    throw ConfigError("run: impulse GCFL (" + desc.name + ") needs tau_g > 0");

  const auto wall0 = std::chrono::steady_clock::now();
  Trace trace;
  StackedState s = init_state(desc, suite, x0, spec.gains, native);
  const long steps = discrete ? std::lround(spec.horizon)
                              : std::lround(spec.horizon / spec.scheme.effective_micro_step());

  double e0 = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  auto record = [&]() {
    Measurement m = measure(s, suite);
    min_gap = std::min(min_gap, m.stationarity.gap);
    TraceRow row{s.t, s.k, m.energy.value, m.stationarity.grad_at_avg_sq, m.stationarity.consensus_sq,
                 m.stationarity.gap, min_gap, m.consensus_y_sq, 0.0};
    double aux = s.z.size() ? s.z.cwiseAbs().maxCoeff() : 0.0;
    if (s.blocks > 1) aux = std::max(aux, s.y.bottomRows(s.y.rows() - s.n_agents).cwiseAbs().maxCoeff());
    row.aux_norm = aux;
    trace.rows.push_back(row);
    trace.last_finite_t = s.t;
    return m;
  };

  e0 = record().energy.value;
  const double limit = spec.divergence_factor * (1.0 + std::abs(e0));
  trace.status = "horizon";
  if (spec.target_gap > 0 && trace.rows.back().gap <= spec.target_gap) trace.status = "converged";

  for (long step = 1; step <= steps && trace.status == "horizon"; ++step) {
    try {
      if (discrete)
        discrete_step(s, desc, suite, spec.scheme, spec.gains, native);
      else
        micro_step(s, desc, suite, spec.scheme, spec.gains);
    } catch (const DivergenceError&) {
      trace.status = "diverged";
      break;
    }
    if (step % spec.record_stride == 0 || step == steps) {
      const TraceRow& row = (record(), trace.rows.back());
      if (!std::isfinite(row.energy) || row.energy > limit) {
        trace.status = "diverged";
        break;
      }
      if (spec.target_gap > 0 && row.gap <= spec.target_gap) trace.status = "converged";
    }
  }
  if (trace.status == "diverged") {
    while (!trace.rows.empty() && !std::isfinite(trace.rows.back().energy)) trace.rows.pop_back();
    if (!trace.rows.empty()) trace.last_finite_t = trace.rows.back().t;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  trace.meta["algorithm"] = desc.name;
  trace.meta["case"] = to_string(spec.scheme.case_tag);
  trace.meta["mode"] = native ? "native" : "controller";
  trace.meta["status"] = trace.status;
  trace.meta["wall_time_s"] = std::to_string(wall);
  if (final_state) *final_state = std::move(s);
  return trace;
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("trace: cannot write " + path);
  out << "t,k,energy,grad_avg_sq,consensus_sq,gap,min_gap\n";
  out << std::setprecision(17);
  for (const auto& r : trace.rows)
    out << r.t << ',' << r.k << ',' << r.energy << ',' << r.grad_avg_sq << ',' << r.consensus_sq << ',' << r.gap
        << ',' << r.min_gap << '\n';
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("trace: cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("t,k,energy,grad_avg_sq,consensus_sq,gap,min_gap", 0) != 0)
    throw ConfigError("trace: missing column in header of " + path);
  Trace t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[7];
    for (double& x : v) {
      if (!std::getline(ss, cell, ',')) throw ConfigError("trace: short row in " + path);
      x = std::stod(cell);
    }
    TraceRow r{v[0], static_cast<long>(v[1]), v[2], v[3], v[4], v[5], v[6]};
    r.consensus_y_sq = r.consensus_sq;
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace mrdo
