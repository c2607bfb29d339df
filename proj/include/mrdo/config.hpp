#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrdo/controllers.hpp"
#include "mrdo/graph.hpp"
#include "mrdo/problem.hpp"
#include "mrdo/simulator.hpp"

namespace mrdo {

using Json = nlohmann::ordered_json;

struct GraphSpec {
  std::string type = "erdos_renyi";  // erdos_renyi | path | complete | explicit
  int n = 20;
  double density = 0.5;
  std::optional<std::uint64_t> seed;
  std::vector<std::array<int, 2>> edges;
  std::string weights = "metropolis";  // metropolis | lazy | optimal | explicit
  std::vector<double> weight_values;
};

struct SchemeSpec {
  std::optional<std::string> case_name;
  std::optional<double> tau_g;
  std::optional<double> tau_l;
  std::optional<int> Q;
  std::optional<int> K;
  std::optional<double> h;
};

struct GainSpec {
  std::string kind = "constant";  // constant | one_over_sqrt_T | piecewise
  std::optional<double> eta_g;
  std::optional<double> eta_l;
  std::optional<double> T;
  std::vector<GainPiece> pieces;
};

struct InitSpec {
  std::string kind = "normal";  // normal | zeros | explicit
  double scale = 1.0;
  std::vector<std::vector<double>> values;
};

struct ExperimentConfig {
  GraphSpec graph;
  ProblemSpec problem;
  bool problem_seed_set = false;
  bool problem_n_set = false;
  std::string algorithm;
  Params params;
  std::string mode = "auto";
  std::optional<SchemeSpec> scheme;
  std::optional<GainSpec> gains;
  InitSpec init;
  double horizon = 100.0;
  int record_stride = 1;
  std::uint64_t seed = 0;
  double target_gap = 0.0;
  std::string output = "out";
};

// Throws ConfigError naming the offending key. Unknown keys are rejected.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);
Json to_json(const ExperimentConfig& c);

GraphSpec parse_graph_spec(const Json& j);
ProblemSpec parse_problem_spec(const Json& j, bool* seed_set = nullptr, bool* n_set = nullptr);

GraphModel build_graph(const GraphSpec& g, std::uint64_t fallback_seed);
ObjectiveSuite build_problem(ProblemSpec p, int n_agents, std::optional<std::uint64_t> seed_override);

// Everything `simulate` needs, resolved from a config.
struct Experiment {
  GraphModel graph;
  ObjectiveSuite suite;
  AlgorithmDescriptor desc;
  Mat x0;
  RunSpec spec;
};

Experiment build_experiment(const ExperimentConfig& c);
Trace run(const ExperimentConfig& c);

std::uint64_t config_hash(const ExperimentConfig& c);

Json read_json_arg(const std::string& text_or_path);

}  // namespace mrdo
