#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "mrdo/linalg.hpp"

namespace mrdo {

// Undirected edge stored with i > j.
struct Edge {
  int i;
  int j;
  auto operator<=>(const Edge&) const = default;
};

class Topology {
 public:
  // Normalizes every pair to i > j and sorts. Rejects self-loops, duplicates and
  // out-of-range indices.
  Topology(int n_agents, std::vector<Edge> edges, std::optional<std::uint64_t> seed = std::nullopt);

  int n_agents() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  std::vector<int> degrees() const;

 private:
  int n_;
  std::vector<Edge> edges_;
  std::optional<std::uint64_t> seed_;
};

Topology path_graph(int n);
Topology complete_graph(int n);
Topology erdos_renyi(int n, double density, std::uint64_t seed, int max_retries = 1000);

// |E| x N, row e = +1 at i, -1 at j for edge (i, j), i > j.
Mat build_incidence(const Topology& t);

bool check_connectivity(const Topology& t);

enum class WeightScheme { metropolis, lazy, optimal, explicit_weights };

struct MixingMatrix {
  Mat W;
  WeightScheme scheme;
  Vec edge_weights;
};

struct SpectralInfo {
  double lambda2 = 0.0;  // second-largest magnitude eigenvalue
  double c_g = 1.0;
  Vec eigenvalues;       // descending
};

struct GraphModel {
  Topology topology;
  MixingMatrix mixing;
  SpectralInfo spectral;

  int n_agents() const { return topology.n_agents(); }
};

SpectralInfo spectral_info(const Mat& W);

GraphModel build_mixing(const Topology& t, WeightScheme scheme,
                        const std::optional<std::vector<double>>& explicit_weights = std::nullopt);

// Full matrix input; checked for symmetry, stochasticity, nonnegativity and the
// sparsity pattern of `t`.
GraphModel build_mixing_from_matrix(const Topology& t, const Mat& W);

inline Mat averaging_matrix(int n) { return Mat::Constant(n, n, 1.0 / n); }

}  // namespace mrdo
