#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "mrdo/errors.hpp"
#include "mrdo/problem.hpp"

using namespace mrdo;
using namespace mrdo::testing;

TEST_CASE("quadratic oracle") {
  const LocalObjective f(Quadratic{4.0, (Vec(2) << 1.0, -1.0).finished()});
  const Vec x = (Vec(2) << 2.0, 0.0).finished();
  const ValueGrad vg = f.value_grad(x);
  CHECK(vg.value == doctest::Approx(4.0));  // 2 * (1 + 1)
  CHECK(vg.grad(0) == doctest::Approx(4.0));
  CHECK(vg.grad(1) == doctest::Approx(4.0));
  CHECK(f.lipschitz() == 4.0);
}

TEST_CASE("logistic oracle against a hand-computed instance") {
  // One sample a = (1, 0), b = 1; x = 0: loss log 2, gradient -a/2.
  Logistic l{(Mat(1, 2) << 1.0, 0.0).finished(), (Vec(1) << 1.0).finished(), 1.0, 0.1};
  const LocalObjective f(l);
  const ValueGrad vg = f.value_grad(Vec::Zero(2));
  CHECK(vg.value == doctest::Approx(std::log(2.0)));
  CHECK(vg.grad(0) == doctest::Approx(-0.5));
  CHECK(vg.grad(1) == doctest::Approx(0.0));
  // Regularizer at x = (0, 1): beta alpha / 2 = 0.05, gradient 2 beta alpha x / (1 + alpha x^2)^2 = 0.05.
  const ValueGrad r = f.value_grad((Vec(2) << 0.0, 1.0).finished());
  CHECK(r.value == doctest::Approx(std::log(2.0) + 0.05));
  CHECK(r.grad(1) == doctest::Approx(0.05));
}

TEST_CASE("logistic values stay finite for large margins") {
  const ObjectiveSuite s = logistic(1, 20, 3, 1);
  const Vec big = Vec::Constant(3, 1e4);
  const ValueGrad vg = s.locals[0].value_grad(big);
  CHECK(std::isfinite(vg.value));
  CHECK(vg.grad.allFinite());
  const ValueGrad neg = s.locals[0].value_grad(-big);
  CHECK(std::isfinite(neg.value));
}

TEST_CASE("logistic Lipschitz bound dominates the finite-difference Hessian") {
  const ObjectiveSuite s = logistic(3, 40, 4, 2);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto& f = s.locals[trial % 3];
    Vec x(4);
    for (int k = 0; k < 4; ++k) x(k) = rng.normal();
    Mat H(4, 4);
    const double h = 1e-5;
    for (int k = 0; k < 4; ++k) {
      Vec xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      H.col(k) = (f.gradient(xp) - f.gradient(xm)) / (2 * h);
    }
    const Mat Hs = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Hs);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= f.lipschitz() + 1e-6);
  }
  CHECK(s.lipschitz() >= s.locals[0].lipschitz());
}

TEST_CASE("suite averages") {
  const ObjectiveSuite s = quadratics({1.0, 3.0}, {{0.0}, {2.0}});
  const Vec x = (Vec(1) << 1.0).finished();
  CHECK(s.average_value(x) == doctest::Approx(0.5 * (0.5 + 1.5)));
  CHECK(s.average_gradient(x)(0) == doctest::Approx(0.5 * (1.0 - 3.0)));
  CHECK(s.lipschitz() == 3.0);
}

TEST_CASE("stationarity gap") {
  const ObjectiveSuite s = quadratics({1.0, 3.0}, {{0.0}, {2.0}});
  // Minimizer of the mean: (1 * 0 + 3 * 2) / 4 = 1.5.
  Mat X = Mat::Constant(2, 1, 1.5);
  StationarityReport r = stationarity_gap(s, X);
  CHECK(r.gap == doctest::Approx(0.0));
  X(0, 0) = 0.5;
  X(1, 0) = 2.5;
  r = stationarity_gap(s, X);
  CHECK(r.consensus_sq == doctest::Approx(2.0));
  CHECK(r.grad_at_avg_sq == doctest::Approx(0.0));
  CHECK(r.gap == doctest::Approx(2.0));
}

TEST_CASE("synthetic generation") {
  ProblemSpec p;
  p.n = 4;
  p.m = 30;
  p.d = 3;
  p.seed = 9;
  const ObjectiveSuite a = generate_synthetic(p), b = generate_synthetic(p);
  REQUIRE(a.n_agents() == 4);
  CHECK(a.dim == 3);
  for (int i = 0; i < 4; ++i) {
    const Logistic* la = a.locals[i].logistic();
    REQUIRE(la != nullptr);
    CHECK(la->features == b.locals[i].logistic()->features);
    CHECK(la->features.rows() == 30);
    CHECK((la->labels.array().abs() == 1.0).all());
  }
  p.seed = 10;
  CHECK(generate_synthetic(p).locals[0].logistic()->features != a.locals[0].logistic()->features);

  ProblemSpec q;
  q.kind = ProblemKind::quadratic;
  q.n = 3;
  q.d = 2;
  const ObjectiveSuite qs = generate_synthetic(q);
  for (const auto& f : qs.locals) CHECK(f.quadratic()->curvature > 0);
}

TEST_CASE("invalid problem parameters") {
  ProblemSpec p;
  p.alpha = -1.0;
  CHECK_THROWS_AS(generate_synthetic(p), ConfigError);
  ProblemSpec q;
  q.kind = ProblemKind::quadratic;
  q.curvatures = std::vector<double>{1.0, -2.0};
  q.targets = std::vector<std::vector<double>>{{0.0}, {1.0}};
  CHECK_THROWS_AS(generate_synthetic(q), ConfigError);
}
