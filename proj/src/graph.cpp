#include "mrdo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "mrdo/errors.hpp"
#include "mrdo/rng.hpp"

namespace mrdo {

Topology::Topology(int n_agents, std::vector<Edge> edges, std::optional<std::uint64_t> seed)
    : n_(n_agents), seed_(seed) {
  if (n_agents < 1) throw ConfigError("graph: n_agents must be positive");
  for (Edge& e : edges) {
    if (e.i == e.j) throw ConfigError("graph: self-loop at agent " + std::to_string(e.i));
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_)
      throw ConfigError("graph: agent index out of range [0, N)");
    if (e.i < e.j) std::swap(e.i, e.j);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw ConfigError("graph: duplicate edge");
  edges_ = std::move(edges);
}

std::vector<int> Topology::degrees() const {
  std::vector<int> deg(n_, 0);
  for (const Edge& e : edges_) {
    ++deg[e.i];
    ++deg[e.j];
  }
  return deg;
}

Topology path_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({i, i - 1});
  return Topology(n, std::move(edges));
}

Topology complete_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) edges.push_back({i, j});
  return Topology(n, std::move(edges));
}

Topology erdos_renyi(int n, double density, std::uint64_t seed, int max_retries) {
  if (n < 2) throw ConfigError("graph: erdos_renyi needs n >= 2");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("graph: density must lie in (0, 1]");
  Rng rng(seed);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        if (rng.uniform() < density) edges.push_back({i, j});
    Topology t(n, std::move(edges), seed);
    if (check_connectivity(t)) return t;
  }
  throw ConfigError("graph: no connected Erdos-Renyi sample after " + std::to_string(max_retries) +
                    " retries (density too low)");
}

Mat build_incidence(const Topology& t) {
  Mat A = Mat::Zero(static_cast<Eigen::Index>(t.edges().size()), t.n_agents());
  for (std::size_t e = 0; e < t.edges().size(); ++e) {
    A(e, t.edges()[e].i) = 1.0;
    A(e, t.edges()[e].j) = -1.0;
  }
  return A;
}

bool check_connectivity(const Topology& t) {
  const int n = t.n_agents();
  std::vector<std::vector<int>> adj(n);
  for (const Edge& e : t.edges()) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int reached = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int w : adj[u])
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        q.push(w);
      }
  }
  return reached == n;
}

SpectralInfo spectral_info(const Mat& W) {
  Eigen::SelfAdjointEigenSolver<Mat> es(W, Eigen::EigenvaluesOnly);
  Vec ev = es.eigenvalues().reverse();  // descending
  int unit = 0;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (std::abs(ev(k) - 1.0) < 1e-10) ++unit;
  if (unit != 1) throw ConfigError("graph: eigenvalue 1 not simple (graph disconnected or W invalid)");
  SpectralInfo info;
  info.eigenvalues = ev;
  double lam2 = 0.0;
  for (Eigen::Index k = 1; k < ev.size(); ++k) lam2 = std::max(lam2, std::abs(ev(k)));
  info.lambda2 = lam2;
  info.c_g = 1.0 - lam2;
  return info;
}

namespace {

Mat laplacian_weighted(const Mat& A, const Vec& w) { return A.transpose() * w.asDiagonal() * A; }

}  // namespace

GraphModel build_mixing(const Topology& t, WeightScheme scheme,
                        const std::optional<std::vector<double>>& explicit_weights) {
  const Mat A = build_incidence(t);
  const auto m = static_cast<Eigen::Index>(t.edges().size());
  const int n = t.n_agents();
  Vec w(m);
  switch (scheme) {
    case WeightScheme::metropolis:
    case WeightScheme::lazy: {
      auto deg = t.degrees();
      for (Eigen::Index e = 0; e < m; ++e) {
        const Edge& ed = t.edges()[e];
        w(e) = 1.0 / (1.0 + std::max(deg[ed.i], deg[ed.j]));
      }
      if (scheme == WeightScheme::lazy) w *= 0.5;
      break;
    }
    case WeightScheme::optimal: {
      if (n == 1) break;
      Mat L = A.transpose() * A;
      Eigen::SelfAdjointEigenSolver<Mat> es(L, Eigen::EigenvaluesOnly);
      const Vec& ev = es.eigenvalues();  // ascending; ev(1) is the algebraic connectivity
      if (ev(1) < 1e-10) throw ConfigError("graph: eigenvalue 1 not simple (graph disconnected)");
      w.setConstant(2.0 / (ev(n - 1) + ev(1)));
      break;
    }
    case WeightScheme::explicit_weights: {
      if (!explicit_weights || explicit_weights->size() != static_cast<std::size_t>(m))
        throw ConfigError("graph: explicit weights need one value per edge");
      for (Eigen::Index e = 0; e < m; ++e) {
        w(e) = (*explicit_weights)[e];
        if (!(w(e) > 0.0)) throw ConfigError("graph: explicit weights violate nonnegativity (edge weight <= 0)");
      }
      break;
    }
  }
  Mat W = Mat::Identity(n, n) - laplacian_weighted(A, w);
  // Edge entries are positive by construction; the diagonal may go negative (best
  // constant weights on dense graphs), which is fine while the spectrum stays in (-1, 1].
  GraphModel g{t, MixingMatrix{W, scheme, w}, spectral_info(W)};
  if (n > 1 && g.spectral.eigenvalues(n - 1) <= -1.0 + 1e-12)
    throw ConfigError("graph: weights put an eigenvalue of W at or below -1");
  return g;
}

GraphModel build_mixing_from_matrix(const Topology& t, const Mat& W) {
  const int n = t.n_agents();
  if (W.rows() != n || W.cols() != n) throw ConfigError("graph: W must be N x N");
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("graph: W violates symmetry");
  if ((W.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw ConfigError("graph: W violates stochasticity (row sums != 1)");
  if (W.minCoeff() < 0.0) throw ConfigError("graph: W violates nonnegativity");
  std::set<std::pair<int, int>> present;
  for (const Edge& e : t.edges()) present.insert({e.i, e.j});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (W(i, j) != 0.0 && !present.count({i, j}))
        throw ConfigError("graph: W has weight on a non-edge");
  Vec w(static_cast<Eigen::Index>(t.edges().size()));
  for (std::size_t e = 0; e < t.edges().size(); ++e) w(e) = W(t.edges()[e].i, t.edges()[e].j);
  return GraphModel{t, MixingMatrix{W, WeightScheme::explicit_weights, w}, spectral_info(W)};
}

}  // namespace mrdo
