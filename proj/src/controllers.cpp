#include "mrdo/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "mrdo/diagnostics.hpp"
#include "mrdo/errors.hpp"
#include "native.hpp"

namespace mrdo {

GlobalController::GlobalController(std::string name, Mat matrix, int n_agents, double declared_c_g, bool persistent)
    : name_(std::move(name)), matrix_(std::move(matrix)), n_(n_agents), declared_c_g_(declared_c_g),
      persistent_(persistent) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() % n_agents != 0)
    throw ConfigError("controllers: GCFL matrix must be square with a multiple of N rows");
}

namespace {

Mat block_diag(const Mat& B, int blocks) {
  const auto n = B.rows();
  Mat M = Mat::Zero(n * blocks, n * blocks);
  for (int b = 0; b < blocks; ++b) M.block(b * n, b * n, n, n) = B;
  return M;
}

}  // namespace

GlobalController make_consensus_gcfl(const Mat& W, int blocks) {
  const int n = static_cast<int>(W.rows());
  const Mat K = Mat::Identity(n, n) - W;
  return GlobalController("consensus", block_diag(K, blocks), n, spectral_info(W).c_g);
}

GlobalController make_consensus_gcfl(const GraphModel& g, int blocks) {
  const int n = g.n_agents();
  const Mat K = Mat::Identity(n, n) - g.mixing.W;
  return GlobalController("consensus", block_diag(K, blocks), n, g.spectral.c_g);
}

double accelerated_momentum(double lambda2) {
  return (1.0 - std::sqrt(1.0 - lambda2)) / (1.0 + std::sqrt(1.0 - lambda2 * lambda2));
}

double accelerated_c_g(double c_g) {
  const double s = std::sqrt(c_g);
  const double r = std::sqrt(2.0 - c_g);
  return c_g * (s + r) / (s + c_g * r);
}

GlobalController make_accelerated_gcfl(const GraphModel& g, int primary_blocks) {
  const int n = g.n_agents();
  const int P = primary_blocks;
  const double c = accelerated_momentum(g.spectral.lambda2);
  const Mat I = Mat::Identity(n, n);
  Mat M = Mat::Zero(2 * P * n, 2 * P * n);
  for (int p = 0; p < P; ++p) {
    const int rp = p * n;
    const int rm = (P + p) * n;
    M.block(rp, rp, n, n) = I - (c + 1.0) * g.mixing.W;
    M.block(rp, rm, n, n) = c * I;
    M.block(rm, rp, n, n) = -I;
    M.block(rm, rm, n, n) = I;
  }
  // Left-multiply by blockdiag(I - R) so the momentum acts on disagreement only and
  // the controller output sums to zero across agents.
  const Mat P_dis = I - averaging_matrix(n);
  for (int b = 0; b < 2 * P; ++b) M.middleRows(b * n, n) = (P_dis * M.middleRows(b * n, n)).eval();
  GlobalController gc("accelerated", std::move(M), n, accelerated_c_g(g.spectral.c_g));
  for (int p = 0; p < P; ++p) gc.memory_pairs.emplace_back(P + p, p);
  return gc;
}

GlobalController make_primal_dual_gcfl(const std::string& name, const Mat& W, double a, double b, double r,
                                       double declared_c_g) {
  const int n = static_cast<int>(W.rows());
  const Mat K = Mat::Identity(n, n) - W;
  Mat M = Mat::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = a * K;
  M.topRightCorner(n, n) = b * Mat::Identity(n, n);
  M.bottomLeftCorner(n, n) = -r * K;
  return GlobalController(name, std::move(M), n, declared_c_g);
}

LocalController::LocalController(LocalKind kind, int y_blocks, int z_blocks, double c, LocalConstants declared)
    : kind_(kind), y_blocks_(y_blocks), z_blocks_(z_blocks), c_(c), declared_(declared) {
  if (kind == LocalKind::tracking && (y_blocks < 2 || z_blocks < 1))
    throw ConfigError("controllers: tracking LCFL needs a v block and a z block");
  if (kind == LocalKind::dgpda && y_blocks < 3) throw ConfigError("controllers: dgpda LCFL needs y = [x; p; m]");
  if (kind == LocalKind::tracking && !(c > 0.0)) throw ConfigError("controllers: tracking gain c must be > 0");
}

AgentOutput LocalController::apply(const LocalObjective& f, const AgentInput& in) const {
  const auto d = in.x.size();
  AgentOutput out{Vec::Zero(d), Mat::Zero(y_blocks_ - 1, d), Mat::Zero(z_blocks_, d)};
  switch (kind_) {
    case LocalKind::gradient:
      out.ux = f.gradient(in.x);
      break;
    case LocalKind::tracking:
      out.ux = c_ * in.v.row(0).transpose();
      out.uv.row(0) = (f.gradient(in.z.row(0).transpose()) - f.gradient(in.x)).transpose();
      out.uz.row(0) = in.z.row(0) - in.x.transpose();
      break;
    case LocalKind::dgpda:
      out.ux = f.gradient(in.x);
      out.uv.row(1) = in.v.row(1) - in.x.transpose();
      break;
  }
  return out;
}

void LocalController::apply_rows(const LocalObjective& f, const Mat& y, const Mat& z, int i, int n, Mat& uy,
                                 Mat& uz) const {
  const Vec x = y.row(i).transpose();
  switch (kind_) {
    case LocalKind::gradient:
      uy.row(i) = f.gradient(x).transpose();
      break;
    case LocalKind::tracking: {
      uy.row(i) = c_ * y.row(n + i);
      uy.row(n + i) = (f.gradient(z.row(i).transpose()) - f.gradient(x)).transpose();
      uz.row(i) = z.row(i) - y.row(i);
      break;
    }
    case LocalKind::dgpda:
      uy.row(i) = f.gradient(x).transpose();
      uy.row(2 * n + i) = y.row(2 * n + i) - y.row(i);
      break;
  }
}

void LocalController::init_rule(const LocalObjective& f, const Vec& x, Mat& v, Mat& z) const {
  switch (kind_) {
    case LocalKind::gradient:
      break;
    case LocalKind::tracking:
      v.row(0) = f.gradient(x).transpose();
      z.row(0) = x.transpose();
      break;
    case LocalKind::dgpda:
      v.row(1) = x.transpose();
      break;
  }
}

LocalController make_lcfl(const std::string& kind, const ObjectiveSuite& suite, double c, int y_blocks) {
  const double Lf = suite.lipschitz();
  if (kind == "gradient") {
    LocalController l(LocalKind::gradient, y_blocks, 0, 1.0, LocalConstants{Lf, 1.0, 1.0, 0.0, 0.0, false});
    l.printed_L = Lf;
    return l;
  }
  if (kind == "tracking") {
    if (!(c > 0.0)) throw ConfigError("controllers: tracking gain c must be > 0");
    // The Lipschitz bound of the stacked map (c v, grad f(z) - grad f(x), z - x) is
    // max{c, sqrt(2 (L_f^2 + 1))}; max{L_f, c, 1} fails for dz = -dx.
    const double L = std::max(c, std::sqrt(2.0 * (Lf * Lf + 1.0)));
    LocalController l(LocalKind::tracking, std::max(y_blocks, 2), 1, c, LocalConstants{L, c, c, 2.0, c, false});
    l.printed_L = std::max({Lf, c, 1.0});
    return l;
  }
  if (kind == "dgpda") {
    const double L = std::sqrt(Lf * Lf + 2.0);
    LocalController l(LocalKind::dgpda, std::max(y_blocks, 3), 0, 1.0, LocalConstants{L, 1.0, 1.0, 0.0, 0.0, true});
    l.printed_L = L;
    return l;
  }
  throw ConfigError("controllers: unknown LCFL kind '" + kind + "'");
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {"dgd",    "dgt",     "next",     "dlm",   "fedprox",
                                                 "fedpd",  "fedavg",  "scaffold", "xfilter", "dgpda",
                                                 "pi",     "d_fedgt", "d_agt"};
  return names;
}

namespace {

double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double required(const Params& p, const std::string& key, const std::string& alg) {
  auto it = p.find(key);
  if (it == p.end()) throw ConfigError("controllers: " + alg + " requires parameter '" + key + "' (no default)");
  return it->second;
}

void check_params(const Params& p, const std::vector<std::string>& allowed, const std::string& alg) {
  for (const auto& [k, v] : p) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("controllers: unknown parameter '" + k + "' for " + alg);
    if (!std::isfinite(v)) throw ConfigError("controllers: parameter '" + k + "' must be finite");
  }
}

DiscretizationScheme scheme_of(Case c, double tau_g, double tau_l, int q = 1, int k = 1) {
  DiscretizationScheme s;
  s.case_tag = c;
  s.tau_g = tau_g;
  s.tau_l = tau_l;
  s.q_ratio = q;
  s.k_ratio = k;
  return s;
}

// Replace estimated P4 constants by trajectory measurements.
void estimate_constants(LocalController& l, const ObjectiveSuite& suite) {
  auto est = estimate_lcfl_constants(l, suite, 200, 12345);
  auto& d = l.declared();
  d.alpha = est.alpha;
  d.c_x = est.c_x;
  d.c_v = est.c_v;
  d.c_z = est.c_z;
  d.estimated = true;
}

}  // namespace

AlgorithmDescriptor catalog(const std::string& name, const GraphModel& graph, const ObjectiveSuite& suite,
                            const Params& params) {
  const int n = graph.n_agents();
  if (suite.n_agents() != n) throw ConfigError("controllers: graph and problem disagree on N");
  const Mat& W = graph.mixing.W;
  const Mat R = averaging_matrix(n);

  if (name == "dgd") {
    check_params(params, {"c"}, name);
    AlgorithmDescriptor d{name, make_consensus_gcfl(graph, 1), make_lcfl("gradient", suite), Case::III,
                          scheme_of(Case::III, 1.0, 1.0)};
    d.eta_l = param(params, "c", 0.05);
    return d;
  }
  if (name == "dgt" || name == "next") {
    double c;
    if (name == "dgt") {
      check_params(params, {"c"}, name);
      c = param(params, "c", 1.0);
    } else {
      check_params(params, {"alpha", "eta"}, name);
      c = n * param(params, "alpha", 0.01) / param(params, "eta", 1.0);
    }
    AlgorithmDescriptor d{name, make_consensus_gcfl(graph, 2), make_lcfl("tracking", suite, c, 2),
                          name == "dgt" ? Case::III : Case::I, scheme_of(Case::III, 1.0, 1.0)};
    if (name == "next") estimate_constants(d.lcfl, suite);
    d.native = native::gradient_tracking(W, c);
    return d;
  }
  if (name == "dlm") {
    check_params(params, {"c", "eta"}, name);
    // Defaults keep |lambda(W_A)| <= 1: the x/v block has |lambda|^2 = (c / eta) mu for mu in the spectrum of I - W.
    const double c = param(params, "c", 0.1);
    const double eta = param(params, "eta", 0.2);
    // v(k+1) = v(k) + c (I-W) x(k) under vdot = -eta u_gv requires u_gv = -(c/eta)(I-W)x.
    AlgorithmDescriptor d{name, make_primal_dual_gcfl("dlm", W, c, 1.0, c / eta, c * graph.spectral.c_g),
                          make_lcfl("gradient", suite, 1.0, 2), Case::III, scheme_of(Case::III, 1.0, 1.0)};
    estimate_constants(d.lcfl, suite);
    d.eta_g = eta;
    d.eta_l = eta;
    d.native = native::dlm(W, c, eta);
    return d;
  }
  if (name == "fedprox") {
    check_params(params, {"eta1", "eta2", "Q"}, name);
    const double eta1 = param(params, "eta1", 0.05);
    const int Q = static_cast<int>(param(params, "Q", 10));
    AlgorithmDescriptor d{name, make_consensus_gcfl(R, 1), make_lcfl("gradient", suite), Case::I,
                          scheme_of(Case::IV, Q * eta1, eta1, Q)};
    d.eta_g = 1.0 / (Q * eta1);  // one full averaging per round
    d.eta_l = 1.0;
    d.native = native::fedprox(eta1, param(params, "eta2", 0.0));
    return d;
  }
  if (name == "fedpd") {
    check_params(params, {"eta1", "eta2", "Q"}, name);
    const double eta1 = param(params, "eta1", 0.05);
    const int Q = static_cast<int>(param(params, "Q", 10));
    AlgorithmDescriptor d{name, make_primal_dual_gcfl("fedpd", R, 1.0, 1.0, 1.0, 1.0),
                          make_lcfl("gradient", suite, 1.0, 2), Case::IV, scheme_of(Case::IV, Q * eta1, eta1, Q)};
    estimate_constants(d.lcfl, suite);
    d.native = native::fedpd(eta1, param(params, "eta2", 1.0));
    return d;
  }
  if (name == "fedavg") {
    check_params(params, {"eta", "Q"}, name);
    const double eta = param(params, "eta", 0.05);
    const int Q = static_cast<int>(param(params, "Q", 10));
    auto g = make_consensus_gcfl(R, 1);
    g = GlobalController("fedavg-impulse", g.matrix(), n, 1.0, /*persistent=*/false);
    AlgorithmDescriptor d{name, g, make_lcfl("gradient", suite), Case::IV, scheme_of(Case::IV, Q * eta, eta, Q)};
    d.native = native::fedavg(eta);
    d.warnings.push_back(
        "fedavg: GCFL is an impulse at sampling instants (not persistent); P5 descent is not certified");
    return d;
  }
  if (name == "scaffold") {
    check_params(params, {"eta", "eta_g", "Q", "printed", "eta1", "eta2"}, name);
    const double eta = param(params, "eta", 0.05);
    const int Q = static_cast<int>(param(params, "Q", 10));
    AlgorithmDescriptor d{name, make_consensus_gcfl(R, 2), make_lcfl("gradient", suite, 1.0, 2), Case::IV,
                          scheme_of(Case::IV, Q * eta, eta, Q)};
    d.native_only = true;
    if (param(params, "printed", 0.0) != 0.0) {
      d.native = native::scaffold_printed(param(params, "eta1", eta), param(params, "eta2", 1.0));
      d.warnings.push_back("scaffold: printed variant selected; it does not remove client drift");
    } else {
      d.native = native::scaffold(eta, param(params, "eta_g", 1.0));
    }
    d.continuous_form =
        "u_gx = eta2 (I-R)x + eta1 v + eta2 R xdot, u_gv = -(I-R)(v + xdot/eta1), "
        "u_lx = grad f(x) - z, u_lv = u_lz = v + xdot/eta1";
    return d;
  }
  if (name == "xfilter") {
    check_params(params, {"eta1", "eta2", "eta3", "K"}, name);
    const double e1 = required(params, "eta1", name);
    const double e2 = required(params, "eta2", name);
    const double e3 = required(params, "eta3", name);
    const int K = static_cast<int>(param(params, "K", 5));
    AlgorithmDescriptor d{name, make_consensus_gcfl(graph, 2), make_lcfl("gradient", suite, 1.0, 2), Case::II,
                          scheme_of(Case::V, 1.0, K, 1, K)};
    d.native_only = true;
    d.native = native::xfilter(W, e1, e2, e3);
    d.continuous_form =
        "u_gx = eta4 (I-W)x + eta4 eta5 v1 + (eta5-1) xdot, u_gv = -(I-R)(v1 + xdot/eta4), "
        "u_lx = eta6 grad f(x) - eta4 eta5 z, u_lv = u_lz = (eta3/eta5) d/dt grad f(x)";
    return d;
  }
  if (name == "dgpda") {
    check_params(params, {"eta1", "eta2"}, name);
    const double e1 = param(params, "eta1", 1.0);
    const double e2 = param(params, "eta2", 2.0);
    const Mat A = build_incidence(graph.topology);
    const Mat L = A.transpose() * A;
    const Mat I = Mat::Identity(n, n);
    // y = [x; p; m], p = A^T (dual), m = prox center held by the LCFL.
    Mat M = Mat::Zero(3 * n, 3 * n);
    M.block(0, 0, n, n) = e1 * e1 * L + e2 * I;
    M.block(0, n, n, n) = I;
    M.block(0, 2 * n, n, n) = -e2 * I;
    M.block(n, 0, n, n) = -e1 * e1 * L;
    // Algebraic connectivity of the Laplacian.
    const double lam = n > 1 ? Eigen::SelfAdjointEigenSolver<Mat>(L).eigenvalues()(1) : 0.0;
    GlobalController g("dgpda", std::move(M), n, e1 * e1 * lam);
    AlgorithmDescriptor d{name, g, make_lcfl("dgpda", suite, 1.0, 3), Case::II, scheme_of(Case::II, 0.0, 1.0)};
    estimate_constants(d.lcfl, suite);
    return d;
  }
  if (name == "pi") {
    check_params(params, {"kP", "kI", "kG"}, name);
    const double kI = param(params, "kI", 1.0);
    AlgorithmDescriptor d{name, make_primal_dual_gcfl("pi", W, 1.0, kI, kI, graph.spectral.c_g),
                          make_lcfl("gradient", suite, 1.0, 2), Case::continuous,
                          scheme_of(Case::continuous, 0.0, 0.0)};
    estimate_constants(d.lcfl, suite);
    d.eta_g = param(params, "kP", 1.0);
    d.eta_l = param(params, "kG", 0.1);
    return d;
  }
  if (name == "d_fedgt") {
    check_params(params, {"c", "Q", "tau_l"}, name);
    const double c = param(params, "c", 1.0);
    const int Q = static_cast<int>(param(params, "Q", 20));
    const double tau_l = param(params, "tau_l", 0.005);
    AlgorithmDescriptor d{name, make_consensus_gcfl(graph, 2), make_lcfl("tracking", suite, c, 2), Case::IV,
                          scheme_of(Case::IV, Q * tau_l, tau_l, Q)};
    return d;
  }
  if (name == "d_agt") {
    check_params(params, {"c"}, name);
    const double c = param(params, "c", 1.0);
    AlgorithmDescriptor d{name, make_accelerated_gcfl(graph, 2), make_lcfl("tracking", suite, c, 4), Case::III,
                          scheme_of(Case::III, 1.0, 1.0)};
    return d;
  }
  throw ConfigError("controllers: unknown algorithm '" + name + "'");
}

}  // namespace mrdo
