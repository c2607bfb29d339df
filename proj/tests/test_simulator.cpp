#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "mrdo/errors.hpp"
#include "mrdo/simulator.hpp"

using namespace mrdo;
using namespace mrdo::testing;

namespace {

GraphModel path3() { return build_mixing(path_graph(3), WeightScheme::metropolis); }

Vec row_mean(const Mat& X) { return X.colwise().mean().transpose(); }

}  // namespace

TEST_CASE("scheme validation") {
  DiscretizationScheme s;
  s.case_tag = Case::III;
  s.tau_g = 1.0;
  s.tau_l = 0.5;
  CHECK_THROWS_WITH(s.validate(), doctest::Contains("case III"));
  s.case_tag = Case::IV;
  s.q_ratio = 3;
  CHECK_THROWS_WITH(s.validate(), doctest::Contains("Q"));
  s.q_ratio = 2;
  CHECK_NOTHROW(s.validate());
  CHECK(s.min_positive_tau() == 0.5);
  s.case_tag = Case::continuous;
  CHECK_THROWS(s.validate());
  s.tau_g = s.tau_l = 0.0;
  CHECK_NOTHROW(s.validate());
  CHECK(parse_case("IV") == Case::IV);
  CHECK(to_string(Case::V) == "V");
  CHECK_THROWS_AS(parse_case("VI"), ConfigError);
}

TEST_CASE("gain schedules") {
  const GainSchedule c = GainSchedule::constant(0.5, 0.25);
  CHECK(c.eta_g(7.0) == 0.5);
  CHECK(c.eta_l(7.0) == 0.25);
  const GainSchedule s = GainSchedule::one_over_sqrt_T(1.0, 2.0, 16.0);
  CHECK(s.eta_l(3.0) == doctest::Approx(0.5));
  CHECK(s.eta_g(3.0) == 1.0);
  const GainSchedule p = GainSchedule::piecewise({{0.0, 1.0, 1.0}, {5.0, 0.5, 0.1}});
  CHECK(p.eta_l(4.9) == 1.0);
  CHECK(p.eta_l(5.0) == 0.1);
  DiscretizationScheme d;
  d.tau_g = d.tau_l = 2.0;
  CHECK_THROWS_WITH(p.validate(d), doctest::Contains("breakpoint"));
  CHECK_THROWS(GainSchedule::piecewise({{1.0, 1.0, 1.0}}));
}

TEST_CASE("dgt controller path and native gradient tracking reach the same optimum") {
  const ObjectiveSuite s = quadratics({1.0, 2.0, 3.0}, {{1.0}, {2.0}, {-1.0}});
  const double opt = (1.0 * 1 + 2.0 * 2 + 3.0 * -1) / 6.0;
  const AlgorithmDescriptor d = catalog("dgt", path3(), s, {{"c", 0.2}});
  const Mat x0 = normal(3, 1, 1);
  RunSpec ctrl = discrete(Case::III, 1, 1, 1, 1, 1.0, 1.0, 600);
  ctrl.mode = RunMode::controller;
  RunSpec nat = ctrl;
  nat.mode = RunMode::native;
  StackedState a, b;
  const Trace ta = simulate(d, s, x0, ctrl, &a);
  const Trace tb = simulate(d, s, x0, nat, &b);
  CHECK(ta.rows.back().gap < 1e-16);
  CHECK(tb.rows.back().gap < 1e-16);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.x()(i, 0) == doctest::Approx(opt).epsilon(1e-8));
    CHECK(b.x()(i, 0) == doctest::Approx(opt).epsilon(1e-8));
  }
}

TEST_CASE("native gradient tracking keeps mean(v) = mean grad f(x)") {
  const ObjectiveSuite s = logistic(3, 20, 2, 4);
  const AlgorithmDescriptor d = catalog("dgt", path3(), s, {{"c", 0.3}});
  const GainSchedule gains = GainSchedule::constant(1.0, 1.0);
  StackedState st = init_state(d, s, normal(3, 2, 2), gains, true);
  DiscretizationScheme sch = d.default_scheme;
  for (int k = 0; k < 50; ++k) {
    discrete_step(st, d, s, sch, gains, true);
    Mat g(3, 2);
    for (int i = 0; i < 3; ++i) g.row(i) = s.locals[i].gradient(st.x().row(i).transpose()).transpose();
    CHECK((row_mean(st.block(1)) - row_mean(g)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("controller-path tracking keeps mean(v) = mean grad f(z) with eta_l = 1") {
  const ObjectiveSuite s = logistic(3, 20, 2, 4);
  const AlgorithmDescriptor d = catalog("dgt", path3(), s, {{"c", 0.3}});
  const GainSchedule gains = GainSchedule::constant(1.0, 1.0);
  StackedState st = init_state(d, s, normal(3, 2, 3), gains);
  for (int k = 0; k < 50; ++k) {
    discrete_step(st, d, s, d.default_scheme, gains);
    Mat g(3, 2);
    for (int i = 0; i < 3; ++i) g.row(i) = s.locals[i].gradient(st.z.row(i).transpose()).transpose();
    CHECK((row_mean(st.block(1)) - row_mean(g)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fedavg on equal-curvature quadratics averages to the mean target") {
  const ObjectiveSuite s = quadratics({1.0, 1.0, 1.0}, {{3.0}, {0.0}, {-6.0}});
  const AlgorithmDescriptor d = catalog("fedavg", path3(), s, {{"eta", 0.1}, {"Q", 5}});
  RunSpec spec = discrete(Case::IV, 0.5, 0.1, 5, 1, 1.0, 1.0, 2000);
  spec.mode = RunMode::native;
  StackedState st;
  simulate(d, s, Mat::Zero(3, 1), spec, &st);
  CHECK(st.x().mean() == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("memory blocks start equal to their sources") {
  const GraphModel g = build_mixing(erdos_renyi(6, 0.5, 1), WeightScheme::metropolis);
  const ObjectiveSuite s = logistic(6, 20, 2, 1);
  const AlgorithmDescriptor d = catalog("d_agt", g, s, {{"c", 0.02}});
  const StackedState st = init_state(d, s, normal(6, 2, 5), GainSchedule::constant(1, 1));
  REQUIRE_FALSE(d.gcfl.memory_pairs.empty());
  for (auto [m, src] : d.gcfl.memory_pairs) CHECK(st.block(m) == st.block(src));
}

TEST_CASE("divergence is reported, not thrown") {
  const ObjectiveSuite s = quadratics({1.0, 1.0, 1.0}, {{1.0}, {0.0}, {-1.0}});
  const AlgorithmDescriptor d = catalog("dgd", path3(), s);
  // eta_l h = 3 > 2: gradient steps overshoot.
  const Trace t = simulate(d, s, Mat::Ones(3, 1), discrete(Case::III, 1, 1, 1, 1, 1.0, 3.0, 500));
  CHECK(t.status == "diverged");
  CHECK(t.last_finite_t > 0);
}

TEST_CASE("target gap stops the run early") {
  const ObjectiveSuite s = quadratics({1.0, 1.0, 1.0}, {{1.0}, {1.0}, {1.0}});
  const AlgorithmDescriptor d = catalog("dgd", path3(), s);
  RunSpec spec = discrete(Case::III, 1, 1, 1, 1, 1.0, 0.5, 10000);
  spec.target_gap = 1e-6;
  const Trace t = simulate(d, s, Mat::Zero(3, 1), spec);
  CHECK(t.status == "converged");
  CHECK(t.rows.back().gap <= 1e-6);
  CHECK(t.rows.back().k < 100);
}

TEST_CASE("invalid micro step and horizon") {
  const ObjectiveSuite s = quadratics({1.0, 1.0, 1.0}, {{1.0}, {1.0}, {1.0}});
  const AlgorithmDescriptor d = catalog("dgd", path3(), s);
  RunSpec spec;
  spec.scheme.case_tag = Case::I;
  spec.scheme.tau_g = 0.1;
  spec.scheme.tau_l = 0.0;
  spec.scheme.micro_step = 0.05;
  spec.horizon = 1.0;
  CHECK_THROWS_WITH(simulate(d, s, Mat::Zero(3, 1), spec), doctest::Contains("micro step"));
  spec.scheme.micro_step = 0.003;
  CHECK_THROWS_WITH(simulate(d, s, Mat::Zero(3, 1), spec), doctest::Contains("integer multiple"));
  spec.scheme.micro_step = 0.01;
  spec.horizon = -1;
  CHECK_THROWS_AS(simulate(d, s, Mat::Zero(3, 1), spec), ConfigError);
  CHECK_THROWS_WITH(simulate(d, s, Mat::Zero(2, 1), discrete(Case::III, 1, 1, 1, 1, 1, 1, 5)),
                    doctest::Contains("x0"));
}

TEST_CASE("RK4 integration is fourth order") {
  const ObjectiveSuite s = logistic(3, 20, 2, 6);
  const AlgorithmDescriptor d = catalog("dgt", path3(), s, {{"c", 0.5}});
  const Mat x0 = normal(3, 2, 7);
  auto final_x = [&](double h) {
    StackedState st;
    simulate(d, s, x0, continuous(1.0, 1.0, 2.0, h), &st);
    return Mat(st.y);
  };
  const Mat a = final_x(0.2), b = final_x(0.1), c = final_x(0.05);
  const double ratio = (a - b).norm() / (b - c).norm();
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("cases III, IV with Q = 1 and V with K = 1 coincide") {
  const ObjectiveSuite s = logistic(3, 20, 2, 8);
  const AlgorithmDescriptor d = catalog("dgt", path3(), s, {{"c", 0.3}});
  const Mat x0 = normal(3, 2, 9);
  StackedState a, b, c;
  RunSpec s3 = discrete(Case::III, 1, 1, 1, 1, 1, 1, 200);
  s3.mode = RunMode::controller;
  RunSpec s4 = s3, s5 = s3;
  s4.scheme.case_tag = Case::IV;
  s5.scheme.case_tag = Case::V;
  simulate(d, s, x0, s3, &a);
  simulate(d, s, x0, s4, &b);
  simulate(d, s, x0, s5, &c);
  CHECK(a.y == b.y);
  CHECK(a.y == c.y);
}

TEST_CASE("trace CSV round trip") {
  const ObjectiveSuite s = logistic(3, 20, 2, 8);
  const AlgorithmDescriptor d = catalog("dgd", path3(), s);
  RunSpec spec = discrete(Case::III, 1, 1, 1, 1, 1, 0.1, 40);
  spec.record_stride = 3;
  const Trace t = simulate(d, s, normal(3, 2, 1), spec);
  const auto path = std::filesystem::temp_directory_path() / "mrdo_trace_roundtrip.csv";
  write_trace_csv(t, path.string());
  const Trace r = read_trace_csv(path.string());
  std::filesystem::remove(path);
  REQUIRE(r.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(r.rows[i].t == t.rows[i].t);
    CHECK(r.rows[i].k == t.rows[i].k);
    CHECK(r.rows[i].energy == t.rows[i].energy);
    CHECK(r.rows[i].gap == t.rows[i].gap);
    CHECK(r.rows[i].min_gap == t.rows[i].min_gap);
  }
  CHECK(t.rows.back().k == 40);
}
