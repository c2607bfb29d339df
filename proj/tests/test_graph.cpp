#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "mrdo/errors.hpp"
#include "mrdo/graph.hpp"

using namespace mrdo;

TEST_CASE("path-3 metropolis weights and spectral gap") {
  const GraphModel g = build_mixing(path_graph(3), WeightScheme::metropolis);
  Mat want(3, 3);
  want << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  CHECK((g.mixing.W - want).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(g.spectral.lambda2 == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(g.spectral.c_g == doctest::Approx(1.0 / 3).epsilon(1e-14));
  // Eigenvalues of this W are 1, 2/3 and 0.
  CHECK(g.spectral.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(std::abs(g.spectral.eigenvalues(2)) < 1e-14);
}

TEST_CASE("uniform weights on a complete graph give the averaging matrix") {
  const int n = 6;
  const Topology t = complete_graph(n);
  const std::vector<double> w(t.edges().size(), 1.0 / n);
  const GraphModel g = build_mixing(t, WeightScheme::explicit_weights, w);
  CHECK((g.mixing.W - averaging_matrix(n)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(g.spectral.lambda2 < 1e-14);
  CHECK(g.spectral.c_g == doctest::Approx(1.0));
}

TEST_CASE("incidence matrix") {
  const Mat A = build_incidence(path_graph(3));
  Mat want(2, 3);
  want << -1, 1, 0, 0, -1, 1;
  CHECK(A == want);
  CHECK(build_incidence(Topology(4, {})).rows() == 0);
  const Mat K = build_incidence(complete_graph(3));
  Mat lap(3, 3);
  lap << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  CHECK(K.transpose() * K == lap);
}

TEST_CASE("topology normalizes and validates edges") {
  const Topology t(4, {{0, 1}, {3, 2}, {1, 3}});
  REQUIRE(t.edges().size() == 3);
  for (const Edge& e : t.edges()) CHECK(e.i > e.j);
  CHECK(std::is_sorted(t.edges().begin(), t.edges().end()));
  CHECK_THROWS_AS(Topology(3, {{1, 1}}), ConfigError);
  CHECK_THROWS_AS(Topology(3, {{0, 1}, {1, 0}}), ConfigError);
  CHECK_THROWS_AS(Topology(3, {{0, 3}}), ConfigError);
}

TEST_CASE("erdos-renyi edge counts and connectivity") {
  CHECK(erdos_renyi(2, 1.0, 5).edges().size() == 1);
  CHECK(erdos_renyi(5, 1.0, 5).edges().size() == 10);
  for (std::uint64_t seed = 0; seed < 10; ++seed) CHECK(check_connectivity(erdos_renyi(20, 0.5, seed)));
  CHECK_THROWS(erdos_renyi(30, 0.01, 1, 5));
  // Same seed, same graph.
  CHECK(erdos_renyi(20, 0.5, 42).edges() == erdos_renyi(20, 0.5, 42).edges());
}

TEST_CASE("connectivity agrees with the Laplacian eigenvalue oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 8;
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        if (rng.uniform() < 0.2) edges.push_back({i, j});
    const Topology t(n, edges);
    const Mat A = build_incidence(t);
    const Mat L = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Mat> es(L);
    const bool oracle = es.eigenvalues()(1) > 1e-9;
    CHECK(check_connectivity(t) == oracle);
  }
}

TEST_CASE("disconnected graph is rejected") {
  const Topology t(4, {{1, 0}, {3, 2}});
  CHECK_FALSE(check_connectivity(t));
  CHECK_THROWS_WITH_AS(build_mixing(t, WeightScheme::metropolis), doctest::Contains("eigenvalue 1 not simple"),
                       ConfigError);
}

TEST_CASE("mixing matrix invariants on random graphs") {
  for (auto scheme : {WeightScheme::metropolis, WeightScheme::lazy, WeightScheme::optimal}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const GraphModel g = build_mixing(erdos_renyi(15, 0.4, seed), scheme);
      const Mat& W = g.mixing.W;
      const int n = 15;
      CHECK((W - W.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((W.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK(g.spectral.eigenvalues.cwiseAbs().maxCoeff() <= 1.0 + 1e-10);
      const Mat R = averaging_matrix(n);
      CHECK((R * (Mat::Identity(n, n) - W)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((R * R - R).cwiseAbs().maxCoeff() < 1e-12);
      for (const Edge& e : g.topology.edges()) CHECK(W(e.i, e.j) >= 0);
      // Dense eigensolver cross-check of C_g.
      Eigen::SelfAdjointEigenSolver<Mat> es(W);
      Vec mags = es.eigenvalues().cwiseAbs();
      std::sort(mags.data(), mags.data() + n, std::greater<>());
      CHECK(g.spectral.c_g == doctest::Approx(1.0 - mags(1)).epsilon(1e-12));
      CHECK(g.spectral.c_g > 0);
      CHECK(g.spectral.c_g <= 1.0);
    }
  }
}

TEST_CASE("lazy weights keep W positive semidefinite") {
  const GraphModel g = build_mixing(erdos_renyi(12, 0.6, 2), WeightScheme::lazy);
  CHECK(g.spectral.eigenvalues.minCoeff() >= -1e-12);
}

TEST_CASE("optimal constant edge weight") {
  const Topology t = erdos_renyi(10, 0.5, 4);
  const GraphModel g = build_mixing(t, WeightScheme::optimal);
  const Mat A = build_incidence(t);
  Eigen::SelfAdjointEigenSolver<Mat> es(A.transpose() * A);
  const double w = 2.0 / (es.eigenvalues()(9) + es.eigenvalues()(1));
  CHECK(g.mixing.edge_weights.minCoeff() == doctest::Approx(w));
  CHECK(g.mixing.edge_weights.maxCoeff() == doctest::Approx(w));
  // Best constant weights equalize the extreme nonunit eigenvalues.
  CHECK(g.spectral.eigenvalues(1) == doctest::Approx(-g.spectral.eigenvalues(9)).epsilon(1e-10));
}

TEST_CASE("explicit matrices are checked") {
  const Topology t = path_graph(3);
  Mat W(3, 3);
  W << 0.5, 0.5, 0, 0.5, 0.25, 0.25, 0, 0.25, 0.75;
  CHECK_NOTHROW(build_mixing_from_matrix(t, W));
  Mat bad = W;
  bad(0, 1) = 0.4;
  CHECK_THROWS_WITH(build_mixing_from_matrix(t, bad), doctest::Contains("symmetry"));
  Mat off = W;
  off(0, 2) = off(2, 0) = 0.1;
  off(0, 0) -= 0.1;
  off(2, 2) -= 0.1;
  CHECK_THROWS_WITH(build_mixing_from_matrix(t, off), doctest::Contains("non-edge"));
  CHECK_THROWS_WITH(build_mixing(t, WeightScheme::explicit_weights, std::vector<double>{0.5, -0.1}),
                    doctest::Contains("nonnegativity"));
}
