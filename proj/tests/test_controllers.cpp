#include <doctest.h>

#include "helpers.hpp"
#include "mrdo/controllers.hpp"
#include "mrdo/diagnostics.hpp"
#include "mrdo/errors.hpp"

using namespace mrdo;
using namespace mrdo::testing;

namespace {

GraphModel path3() { return build_mixing(path_graph(3), WeightScheme::metropolis); }

}  // namespace

TEST_CASE("catalog covers every algorithm") {
  const auto& names = catalog_names();
  CHECK(names.size() == 13);
  const GraphModel g = path3();
  const ObjectiveSuite s = logistic(3, 20, 2, 1);
  for (const auto& name : names) {
    Params p;
    if (name == "xfilter") p = {{"eta1", 0.1}, {"eta2", 0.1}, {"eta3", 0.1}};
    INFO(name);
    const AlgorithmDescriptor d = catalog(name, g, s, p);
    CHECK(d.name == name);
    CHECK(d.gcfl.blocks() == d.lcfl.y_blocks());
    CHECK(d.gcfl.n_agents() == 3);
    CHECK_NOTHROW(d.default_scheme.validate());
    CHECK((d.native.has_value() || !d.native_only));
  }
  CHECK_THROWS_WITH_AS(catalog("sgd", g, s), doctest::Contains("unknown algorithm"), ConfigError);
}

TEST_CASE("parameter validation") {
  const GraphModel g = path3();
  const ObjectiveSuite s = logistic(3, 20, 2, 1);
  CHECK_THROWS_WITH(catalog("xfilter", g, s), doctest::Contains("requires parameter 'eta1'"));
  CHECK_THROWS_WITH(catalog("dgt", g, s, {{"alpha", 1.0}}), doctest::Contains("unknown parameter 'alpha'"));
  CHECK_THROWS_AS(catalog("dgt", g, s, {{"c", -1.0}}), ConfigError);
  const ObjectiveSuite four = logistic(4, 20, 2, 1);
  CHECK_THROWS_WITH(catalog("dgd", g, four), doctest::Contains("disagree on N"));
}

TEST_CASE("consensus GCFL matrix and declared constant") {
  const GraphModel g = path3();
  const GlobalController c = make_consensus_gcfl(g, 2);
  CHECK(c.blocks() == 2);
  const Mat IW = Mat::Identity(3, 3) - g.mixing.W;
  CHECK((c.matrix().topLeftCorner(3, 3) - IW).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((c.matrix().bottomRightCorner(3, 3) - IW).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(c.matrix().topRightCorner(3, 3).isZero());
  CHECK(c.declared_c_g() == doctest::Approx(1.0 / 3));
  CHECK(c.persistent());
}

TEST_CASE("accelerated GCFL acts on disagreement only") {
  const GraphModel g = build_mixing(erdos_renyi(8, 0.5, 3), WeightScheme::metropolis);
  const GlobalController a = make_accelerated_gcfl(g, 2);
  CHECK(a.blocks() == 4);
  CHECK(a.memory_pairs.size() == 2);
  const int n = 8;
  Mat Rb = Mat::Zero(4 * n, 4 * n);
  for (int b = 0; b < 4; ++b) Rb.block(b * n, b * n, n, n) = averaging_matrix(n);
  CHECK((Rb * a.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(accelerated_momentum(0.0) == doctest::Approx(0.0));
  CHECK(accelerated_c_g(1.0) > 0);
}

TEST_CASE("fedavg is an impulse controller") {
  const GraphModel g = path3();
  const AlgorithmDescriptor d = catalog("fedavg", g, logistic(3, 20, 2, 1));
  CHECK_FALSE(d.gcfl.persistent());
  REQUIRE_FALSE(d.warnings.empty());
  CHECK(d.warnings[0].find("not persistent") != std::string::npos);
  CHECK(d.default_scheme.case_tag == Case::IV);
  CHECK(d.default_scheme.tau_g == doctest::Approx(d.default_scheme.q_ratio * d.default_scheme.tau_l));
}

TEST_CASE("gradient LCFL output") {
  const ObjectiveSuite s = quadratics({2.0, 4.0}, {{1.0}, {-1.0}});
  const LocalController l = make_lcfl("gradient", s);
  AgentInput in{(Vec(1) << 3.0).finished(), Mat(0, 1), Mat(0, 1)};
  const AgentOutput out = l.apply(s.locals[0], in);
  CHECK(out.ux(0) == doctest::Approx(4.0));
  CHECK(l.declared().L == 4.0);
  CHECK_FALSE(l.has_init_rule());
}

TEST_CASE("tracking LCFL output and init rule") {
  const ObjectiveSuite s = quadratics({2.0}, {{1.0, 0.0}});
  const LocalController l = make_lcfl("tracking", s, 0.5, 2);
  CHECK(l.y_blocks() == 2);
  CHECK(l.z_blocks() == 1);
  const Vec x = (Vec(2) << 3.0, 1.0).finished();
  Mat v = Mat::Zero(1, 2), z = Mat::Zero(1, 2);
  l.init_rule(s.locals[0], x, v, z);
  CHECK(v(0, 0) == doctest::Approx(4.0));
  CHECK(v(0, 1) == doctest::Approx(2.0));
  CHECK(z.row(0).transpose() == x);

  // z = x on the manifold, so u_v = 0 and u_z = 0.
  AgentOutput out = l.apply(s.locals[0], AgentInput{x, v, z});
  CHECK(out.ux(0) == doctest::Approx(2.0));
  CHECK(out.uv.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(out.uz.cwiseAbs().maxCoeff() < 1e-15);

  Mat z2 = z;
  z2(0, 0) = 2.0;
  out = l.apply(s.locals[0], AgentInput{x, v, z2});
  // -grad f(x) + grad f(z) = -2 (3 - 2) = -2 on the first coordinate; u_z = z - x.
  CHECK(out.uv(0, 0) == doctest::Approx(-2.0));
  CHECK(out.uz(0, 0) == doctest::Approx(-1.0));

  CHECK(l.declared().alpha == 0.5);
  CHECK(l.declared().c_v == 2.0);
  CHECK(l.declared().L >= std::max(0.5, std::sqrt(2.0 * (4.0 + 1.0))));
}

TEST_CASE("local controllers certify P3 and P4 on a logistic suite") {
  const ObjectiveSuite s = logistic(3, 30, 3, 5);
  for (const char* kind : {"gradient", "tracking"}) {
    INFO(kind);
    const LcflCertificates c = verify_lcfl(make_lcfl(kind, s, 1.0, 2), s, 100, 1);
    CHECK(c.p3.passed);
    CHECK(c.p4.passed);
  }
}

TEST_CASE("dlm defaults give a stable primal-dual block") {
  const GraphModel g = path3();
  const AlgorithmDescriptor d = catalog("dlm", g, logistic(3, 20, 2, 1));
  const GcflCertificates c = verify_gcfl(d.gcfl, 2, 100, 3);
  CHECK(c.p2.passed);
}

TEST_CASE("consensus and accelerated GCFL certificates on 1000 samples") {
  // P2 needs |lambda(I - W)| <= 1, i.e. W positive semidefinite; lazy weights guarantee it.
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const GraphModel g = build_mixing(erdos_renyi(10, 0.4, seed), WeightScheme::lazy);
    const GcflCertificates c = verify_gcfl(make_consensus_gcfl(g, 2), 3, 1000, seed);
    CHECK(c.p1.passed);
    CHECK(c.p1.worst_margin >= -1e-9);
    CHECK(c.p2.passed);
    CHECK(c.p2.extras.at("superposition_error") <= 1e-10);
    CHECK(c.p1.estimate == doctest::Approx(g.spectral.c_g).epsilon(1e-6));
    const GcflCertificates a = verify_gcfl(make_accelerated_gcfl(g, 2), 3, 1000, seed);
    CHECK(a.p1.extras.at("orthogonality") <= 1e-10);
    CHECK(a.p2.extras.at("superposition_error") <= 1e-10);
    INFO("accelerated P1 ", a.p1.passed, " estimate ", a.p1.estimate, " P2 rho ", a.p2.estimate);
    CHECK(a.p2.passed);
  }
}

TEST_CASE("averaging GCFL is the ideal consensus controller") {
  const GlobalController c = make_consensus_gcfl(averaging_matrix(5));
  const GcflCertificates r = verify_gcfl(c, 2, 100, 1);
  CHECK(r.p1.passed);
  CHECK(r.p1.estimate == doctest::Approx(1.0));
  CHECK(r.p2.passed);
}
