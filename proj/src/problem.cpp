#include "mrdo/problem.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "mrdo/errors.hpp"
#include "mrdo/rng.hpp"

namespace mrdo {

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

// 1 / (1 + e^t) without overflow
double sigmoid_neg(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double logistic_lipschitz(const Logistic& l) {
  const double m = static_cast<double>(l.features.rows());
  Mat gram = l.features.transpose() * l.features;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / (4.0 * m) + 2.0 * l.beta * l.alpha;
}

}  // namespace

LocalObjective::LocalObjective(Quadratic q)
    : data_(std::move(q)),
      dim_(static_cast<int>(std::get<Quadratic>(data_).target.size())),
      lipschitz_(std::get<Quadratic>(data_).curvature) {
  if (!(std::get<Quadratic>(data_).curvature > 0.0)) throw ConfigError("problem: quadratic curvature must be > 0");
}

LocalObjective::LocalObjective(Logistic l)
    : data_(std::move(l)),
      dim_(static_cast<int>(std::get<Logistic>(data_).features.cols())),
      lipschitz_(logistic_lipschitz(std::get<Logistic>(data_))) {
  const auto& lg = std::get<Logistic>(data_);
  if (lg.labels.size() != lg.features.rows()) throw ConfigError("problem: label count != feature rows");
  if (!(lg.alpha > 0.0 && lg.beta > 0.0)) throw ConfigError("problem: alpha and beta must be > 0");
}

ValueGrad LocalObjective::value_grad(const Vec& x) const {
  if (x.size() != dim_) throw ConfigError("problem: dimension mismatch");
  if (const auto* q = std::get_if<Quadratic>(&data_)) {
    Vec r = x - q->target;
    return {0.5 * q->curvature * r.squaredNorm(), q->curvature * r};
  }
  const auto& l = std::get<Logistic>(data_);
  const double m = static_cast<double>(l.features.rows());
  Vec margin = l.labels.cwiseProduct(l.features * x);
  double value = 0.0;
  Vec weight(margin.size());
  for (Eigen::Index s = 0; s < margin.size(); ++s) {
    value += softplus(-margin(s));
    weight(s) = -l.labels(s) * sigmoid_neg(margin(s));
  }
  value /= m;
  Vec grad = l.features.transpose() * weight / m;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double ax2 = l.alpha * x(k) * x(k);
    value += l.beta * ax2 / (1.0 + ax2);
    grad(k) += 2.0 * l.beta * l.alpha * x(k) / ((1.0 + ax2) * (1.0 + ax2));
  }
  return {value, grad};
}

Vec LocalObjective::gradient(const Vec& x) const { return value_grad(x).grad; }

double ObjectiveSuite::lipschitz() const {
  double L = 0.0;
  for (const auto& o : locals) L = std::max(L, o.lipschitz());
  return L;
}

double ObjectiveSuite::average_value(const Vec& x) const {
  double v = 0.0;
  for (const auto& o : locals) v += o.value(x);
  return v / n_agents();
}

Vec ObjectiveSuite::average_gradient(const Vec& x) const {
  Vec g = Vec::Zero(dim);
  for (const auto& o : locals) g += o.gradient(x);
  return g / n_agents();
}

ObjectiveSuite make_suite(std::vector<LocalObjective> locals) {
  if (locals.empty()) throw ConfigError("problem: suite needs at least one agent");
  const int d = locals.front().dim();
  for (const auto& o : locals)
    if (o.dim() != d) throw ConfigError("problem: all local objectives must share d");
  return ObjectiveSuite{std::move(locals), d};
}

StationarityReport stationarity_gap(const ObjectiveSuite& s, const Mat& X) {
  if (X.rows() != s.n_agents() || X.cols() != s.dim) throw ConfigError("problem: state shape mismatch");
  Vec xbar = X.colwise().mean().transpose();
  const double g = s.average_gradient(xbar).squaredNorm();
  const double c = (X.rowwise() - xbar.transpose()).squaredNorm();
  return {g, c, g + c};
}

ObjectiveSuite generate_synthetic(const ProblemSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw ConfigError("problem: sizes must be positive");
  if (spec.heterogeneity < 0.0) throw ConfigError("problem: heterogeneity must be >= 0");
  std::vector<LocalObjective> locals;
  locals.reserve(spec.n);
  Rng rng(spec.seed);

  if (spec.kind == ProblemKind::quadratic) {
    if (spec.curvatures || spec.targets) {
      if (!spec.curvatures || !spec.targets || spec.curvatures->size() != spec.targets->size())
        throw ConfigError("problem: explicit quadratic needs matching 'h' and 'a' lists");
      for (std::size_t i = 0; i < spec.curvatures->size(); ++i) {
        const auto& a = (*spec.targets)[i];
        locals.emplace_back(Quadratic{(*spec.curvatures)[i], Eigen::Map<const Vec>(a.data(), a.size())});
      }
      return make_suite(std::move(locals));
    }
    Vec shared(spec.d);
    for (int k = 0; k < spec.d; ++k) shared(k) = rng.normal();
    for (int i = 0; i < spec.n; ++i) {
      Vec a = shared;
      for (int k = 0; k < spec.d; ++k) a(k) += spec.heterogeneity * rng.normal();
      const double h = 1.0 + spec.heterogeneity * rng.uniform();
      locals.emplace_back(Quadratic{h, a});
    }
    return make_suite(std::move(locals));
  }

  if (spec.m < 1) throw ConfigError("problem: m must be positive");
  Vec shared(spec.d);
  for (int k = 0; k < spec.d; ++k) shared(k) = rng.normal();
  for (int i = 0; i < spec.n; ++i) {
    Vec w = shared;
    for (int k = 0; k < spec.d; ++k) w(k) += spec.heterogeneity * rng.normal();
    Mat A(spec.m, spec.d);
    Vec b(spec.m);
    for (int s = 0; s < spec.m; ++s) {
      for (int k = 0; k < spec.d; ++k) A(s, k) = rng.normal();
      double label = A.row(s).dot(w) >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform() < 0.05) label = -label;
      b(s) = label;
    }
    locals.emplace_back(Logistic{std::move(A), std::move(b), spec.alpha, spec.beta});
  }
  return make_suite(std::move(locals));
}

}  // namespace mrdo
