#include "mrdo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mrdo/errors.hpp"
#include "mrdo/rng.hpp"

namespace mrdo {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
}

template <class T>
T get(const Json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: '" + where + "." + key + "' has the wrong type");
  }
}

template <class T>
void read(const Json& j, const std::string& key, const std::string& where, T& out) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

template <class T>
void read(const Json& j, const std::string& key, const std::string& where, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = get<T>(j, key, where);
}

}  // namespace

GraphSpec parse_graph_spec(const Json& j) {
  check_keys(j, {"type", "n", "density", "seed", "edges", "weights"}, "graph");
  GraphSpec g;
  read(j, "type", "graph", g.type);
  read(j, "n", "graph", g.n);
  read(j, "density", "graph", g.density);
  read(j, "seed", "graph", g.seed);
  read(j, "edges", "graph", g.edges);
  if (j.contains("weights")) {
    if (j["weights"].is_string())
      g.weights = j["weights"].get<std::string>();
    else if (j["weights"].is_array()) {
      g.weights = "explicit";
      g.weight_values = get<std::vector<double>>(j, "weights", "graph");
    } else {
      throw ConfigError("config: 'graph.weights' must be a scheme name or a list of edge weights");
    }
  }
  static const std::set<std::string> types = {"erdos_renyi", "path", "complete", "explicit"};
  if (!types.count(g.type)) throw ConfigError("config: unknown graph type '" + g.type + "'");
  static const std::set<std::string> schemes = {"metropolis", "lazy", "optimal", "explicit"};
  if (!schemes.count(g.weights)) throw ConfigError("config: unknown weight scheme '" + g.weights + "'");
  if (g.n < 1) throw ConfigError("config: 'graph.n' must be positive");
  return g;
}

ProblemSpec parse_problem_spec(const Json& j, bool* seed_set, bool* n_set) {
  check_keys(j, {"kind", "n", "m", "d", "alpha", "beta", "heterogeneity", "seed", "h", "a"}, "problem");
  ProblemSpec p;
  std::string kind = "logistic";
  read(j, "kind", "problem", kind);
  if (kind == "logistic")
    p.kind = ProblemKind::logistic;
  else if (kind == "quadratic")
    p.kind = ProblemKind::quadratic;
  else
    throw ConfigError("config: unknown problem kind '" + kind + "'");
  read(j, "n", "problem", p.n);
  read(j, "m", "problem", p.m);
  read(j, "d", "problem", p.d);
  read(j, "alpha", "problem", p.alpha);
  read(j, "beta", "problem", p.beta);
  read(j, "heterogeneity", "problem", p.heterogeneity);
  read(j, "seed", "problem", p.seed);
  read(j, "h", "problem", p.curvatures);
  read(j, "a", "problem", p.targets);
  if (p.curvatures && p.kind != ProblemKind::quadratic) throw ConfigError("config: 'problem.h' needs kind quadratic");
  if (p.curvatures) {
    p.n = static_cast<int>(p.curvatures->size());
    if (p.targets && !p.targets->empty()) p.d = static_cast<int>(p.targets->front().size());
  }
  if (seed_set) *seed_set = j.contains("seed");
  if (n_set) *n_set = j.contains("n") || p.curvatures.has_value();
  return p;
}

ExperimentConfig parse_config(const Json& j) {
  check_keys(j, {"graph", "problem", "algorithm", "scheme", "gains", "init", "horizon", "record_stride", "seed",
                 "target_gap", "output"},
             "config");
  ExperimentConfig c;
  if (!j.contains("algorithm")) throw ConfigError("config: missing 'algorithm'");
  read(j, "seed", "config", c.seed);
  if (j.contains("graph")) c.graph = parse_graph_spec(j["graph"]);
  if (j.contains("problem")) c.problem = parse_problem_spec(j["problem"], &c.problem_seed_set, &c.problem_n_set);

  const Json& a = j["algorithm"];
  if (a.is_string()) {
    c.algorithm = a.get<std::string>();
  } else {
    check_keys(a, {"name", "params", "mode"}, "algorithm");
    c.algorithm = get<std::string>(a, "name", "algorithm");
    if (a.contains("params")) {
      if (!a["params"].is_object()) throw ConfigError("config: 'algorithm.params' must be an object");
      for (auto it = a["params"].begin(); it != a["params"].end(); ++it) {
        if (!it.value().is_number()) throw ConfigError("config: 'algorithm.params." + it.key() + "' must be a number");
        c.params[it.key()] = it.value().get<double>();
      }
    }
    read(a, "mode", "algorithm", c.mode);
  }
  const auto& names = catalog_names();
  if (std::find(names.begin(), names.end(), c.algorithm) == names.end())
    throw ConfigError("config: unknown algorithm '" + c.algorithm + "'");
  if (c.mode != "auto" && c.mode != "controller" && c.mode != "native")
    throw ConfigError("config: 'algorithm.mode' must be auto, controller or native");

  if (j.contains("scheme")) {
    const Json& s = j["scheme"];
    check_keys(s, {"case", "tau_g", "tau_l", "Q", "K", "h"}, "scheme");
    SchemeSpec ss;
    read(s, "case", "scheme", ss.case_name);
    read(s, "tau_g", "scheme", ss.tau_g);
    read(s, "tau_l", "scheme", ss.tau_l);
    read(s, "Q", "scheme", ss.Q);
    read(s, "K", "scheme", ss.K);
    read(s, "h", "scheme", ss.h);
    if (ss.case_name) parse_case(*ss.case_name);
    c.scheme = ss;
  }
  if (j.contains("gains")) {
    const Json& g = j["gains"];
    check_keys(g, {"kind", "eta_g", "eta_l", "T", "pieces"}, "gains");
    GainSpec gs;
    read(g, "kind", "gains", gs.kind);
    read(g, "eta_g", "gains", gs.eta_g);
    read(g, "eta_l", "gains", gs.eta_l);
    read(g, "T", "gains", gs.T);
    if (g.contains("pieces")) {
      for (const auto& p : g["pieces"]) {
        check_keys(p, {"t", "eta_g", "eta_l"}, "gains.pieces[]");
        gs.pieces.push_back({get<double>(p, "t", "gains.pieces[]"), get<double>(p, "eta_g", "gains.pieces[]"),
                             get<double>(p, "eta_l", "gains.pieces[]")});
      }
    }
    if (gs.kind != "constant" && gs.kind != "one_over_sqrt_T" && gs.kind != "piecewise")
      throw ConfigError("config: unknown gain kind '" + gs.kind + "'");
    c.gains = gs;
  }
  if (j.contains("init")) {
    const Json& i = j["init"];
    check_keys(i, {"kind", "scale", "values"}, "init");
    read(i, "kind", "init", c.init.kind);
    read(i, "scale", "init", c.init.scale);
    read(i, "values", "init", c.init.values);
    if (c.init.kind != "normal" && c.init.kind != "zeros" && c.init.kind != "explicit")
      throw ConfigError("config: unknown init kind '" + c.init.kind + "'");
  }
  read(j, "horizon", "config", c.horizon);
  read(j, "record_stride", "config", c.record_stride);
  read(j, "target_gap", "config", c.target_gap);
  read(j, "output", "config", c.output);
  if (!(c.horizon > 0)) throw ConfigError("config: 'horizon' must be > 0");
  if (c.record_stride < 1) throw ConfigError("config: 'record_stride' must be >= 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  Json g;
  g["type"] = c.graph.type;
  g["n"] = c.graph.n;
  g["density"] = c.graph.density;
  if (c.graph.seed) g["seed"] = *c.graph.seed;
  if (!c.graph.edges.empty()) g["edges"] = c.graph.edges;
  if (c.graph.weights == "explicit")
    g["weights"] = c.graph.weight_values;
  else
    g["weights"] = c.graph.weights;
  j["graph"] = g;

  Json p;
  p["kind"] = c.problem.kind == ProblemKind::logistic ? "logistic" : "quadratic";
  if (c.problem_n_set && !c.problem.curvatures) p["n"] = c.problem.n;
  p["m"] = c.problem.m;
  p["d"] = c.problem.d;
  p["alpha"] = c.problem.alpha;
  p["beta"] = c.problem.beta;
  p["heterogeneity"] = c.problem.heterogeneity;
  if (c.problem_seed_set) p["seed"] = c.problem.seed;
  if (c.problem.curvatures) p["h"] = *c.problem.curvatures;
  if (c.problem.targets) p["a"] = *c.problem.targets;
  j["problem"] = p;

  Json a;
  a["name"] = c.algorithm;
  a["params"] = Json::object();
  for (const auto& [k, v] : c.params) a["params"][k] = v;
  a["mode"] = c.mode;
  j["algorithm"] = a;

  if (c.scheme) {
    Json s = Json::object();
    if (c.scheme->case_name) s["case"] = *c.scheme->case_name;
    if (c.scheme->tau_g) s["tau_g"] = *c.scheme->tau_g;
    if (c.scheme->tau_l) s["tau_l"] = *c.scheme->tau_l;
    if (c.scheme->Q) s["Q"] = *c.scheme->Q;
    if (c.scheme->K) s["K"] = *c.scheme->K;
    if (c.scheme->h) s["h"] = *c.scheme->h;
    j["scheme"] = s;
  }
  if (c.gains) {
    Json s;
    s["kind"] = c.gains->kind;
    if (c.gains->eta_g) s["eta_g"] = *c.gains->eta_g;
    if (c.gains->eta_l) s["eta_l"] = *c.gains->eta_l;
    if (c.gains->T) s["T"] = *c.gains->T;
    if (!c.gains->pieces.empty()) {
      s["pieces"] = Json::array();
      for (const auto& pc : c.gains->pieces) s["pieces"].push_back({{"t", pc.t_start}, {"eta_g", pc.eta_g}, {"eta_l", pc.eta_l}});
    }
    j["gains"] = s;
  }
  Json i;
  i["kind"] = c.init.kind;
  i["scale"] = c.init.scale;
  if (!c.init.values.empty()) i["values"] = c.init.values;
  j["init"] = i;
  j["horizon"] = c.horizon;
  j["record_stride"] = c.record_stride;
  j["seed"] = c.seed;
  j["target_gap"] = c.target_gap;
  j["output"] = c.output;
  return j;
}

GraphModel build_graph(const GraphSpec& g, std::uint64_t fallback_seed) {
  const std::uint64_t seed = g.seed.value_or(fallback_seed);
  std::optional<Topology> topo;
  if (g.type == "erdos_renyi")
    topo = erdos_renyi(g.n, g.density, seed);
  else if (g.type == "path")
    topo = path_graph(g.n);
  else if (g.type == "complete")
    topo = complete_graph(g.n);
  else {
    std::vector<Edge> edges;
    for (auto e : g.edges) edges.push_back({e[0], e[1]});
    topo = Topology(g.n, std::move(edges));
  }
  if (!check_connectivity(*topo)) throw ConfigError("graph: eigenvalue 1 not simple (graph disconnected)");
  WeightScheme ws = WeightScheme::metropolis;
  if (g.weights == "lazy") ws = WeightScheme::lazy;
  if (g.weights == "optimal") ws = WeightScheme::optimal;
  if (g.weights == "explicit") return build_mixing(*topo, WeightScheme::explicit_weights, g.weight_values);
  return build_mixing(*topo, ws);
}

ObjectiveSuite build_problem(ProblemSpec p, int n_agents, std::optional<std::uint64_t> seed_override) {
  if (seed_override) p.seed = *seed_override;
  if (!p.curvatures) p.n = n_agents;
  ObjectiveSuite s = generate_synthetic(p);
  if (s.n_agents() != n_agents) throw ConfigError("config: problem and graph disagree on the number of agents");
  return s;
}

Experiment build_experiment(const ExperimentConfig& c) {
  if (c.problem_n_set && !c.problem.curvatures && c.problem.n != c.graph.n)
    throw ConfigError("config: 'problem.n' must equal 'graph.n'");
  GraphModel graph = build_graph(c.graph, c.seed);
  ObjectiveSuite suite =
      build_problem(c.problem, graph.n_agents(), c.problem_seed_set ? std::nullopt : std::optional(c.seed));
  AlgorithmDescriptor desc = catalog(c.algorithm, graph, suite, c.params);

  RunSpec spec;
  spec.scheme = desc.default_scheme;
  if (c.scheme) {
    const SchemeSpec& s = *c.scheme;
    if (s.case_name) spec.scheme.case_tag = parse_case(*s.case_name);
    if (s.tau_g) spec.scheme.tau_g = *s.tau_g;
    if (s.tau_l) spec.scheme.tau_l = *s.tau_l;
    if (s.Q) spec.scheme.q_ratio = *s.Q;
    if (s.K) spec.scheme.k_ratio = *s.K;
    if (s.h) spec.scheme.micro_step = *s.h;
    // Derive the slower interval from the ratio when only one side is given.
    if (spec.scheme.case_tag == Case::IV && s.Q && s.tau_l && !s.tau_g) spec.scheme.tau_g = *s.Q * *s.tau_l;
    if (spec.scheme.case_tag == Case::V && s.K && s.tau_g && !s.tau_l) spec.scheme.tau_l = *s.K * *s.tau_g;
    if (spec.scheme.case_tag == Case::III && s.tau_g && !s.tau_l) spec.scheme.tau_l = *s.tau_g;
    if (spec.scheme.case_tag == Case::continuous) spec.scheme.tau_g = spec.scheme.tau_l = 0.0;
    if (spec.scheme.case_tag == Case::I && !s.tau_l) spec.scheme.tau_l = 0.0;
    if (spec.scheme.case_tag == Case::II && !s.tau_g) spec.scheme.tau_g = 0.0;
  }
  double eta_g = desc.eta_g, eta_l = desc.eta_l;
  if (c.gains) {
    eta_g = c.gains->eta_g.value_or(eta_g);
    eta_l = c.gains->eta_l.value_or(eta_l);
    if (c.gains->kind == "constant")
      spec.gains = GainSchedule::constant(eta_g, eta_l);
    else if (c.gains->kind == "one_over_sqrt_T")
      spec.gains = GainSchedule::one_over_sqrt_T(eta_g, eta_l, c.gains->T.value_or(c.horizon));
    else
      spec.gains = GainSchedule::piecewise(c.gains->pieces);
  } else {
    spec.gains = GainSchedule::constant(eta_g, eta_l);
  }
  spec.horizon = c.horizon;
  spec.record_stride = c.record_stride;
  spec.target_gap = c.target_gap;
  spec.mode = c.mode == "native" ? RunMode::native : c.mode == "controller" ? RunMode::controller : RunMode::automatic;

  Mat x0 = Mat::Zero(suite.n_agents(), suite.dim);
  if (c.init.kind == "normal") {
    Rng rng(splitmix64(c.seed));
    for (Eigen::Index j = 0; j < x0.cols(); ++j)
      for (Eigen::Index i = 0; i < x0.rows(); ++i) x0(i, j) = c.init.scale * rng.normal();
  } else if (c.init.kind == "explicit") {
    if (static_cast<int>(c.init.values.size()) != suite.n_agents())
      throw ConfigError("config: 'init.values' needs one row per agent");
    for (int i = 0; i < suite.n_agents(); ++i) {
      if (static_cast<int>(c.init.values[i].size()) != suite.dim) throw ConfigError("config: 'init.values' row has wrong length");
      for (int k = 0; k < suite.dim; ++k) x0(i, k) = c.init.values[i][k];
    }
  }
  return Experiment{std::move(graph), std::move(suite), std::move(desc), std::move(x0), spec};
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // FNV-1a over the canonical serialization.
  const std::string s = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

Trace run(const ExperimentConfig& c) {
  Experiment e = build_experiment(c);
  Trace t = simulate(e.desc, e.suite, e.x0, e.spec);
  std::ostringstream hs;
  hs << std::hex << config_hash(c);
  t.meta["config_hash"] = hs.str();
  t.meta["seed"] = std::to_string(c.seed);
  for (std::size_t i = 0; i < e.desc.warnings.size(); ++i) t.meta["warning_" + std::to_string(i)] = e.desc.warnings[i];
  return t;
}

Json read_json_arg(const std::string& text_or_path) {
  try {
    const auto first = text_or_path.find_first_not_of(" \t\n");
    if (first != std::string::npos && (text_or_path[first] == '{' || text_or_path[first] == '['))
      return Json::parse(text_or_path);
    std::ifstream in(text_or_path);
    if (!in) throw ConfigError("config: cannot read " + text_or_path);
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
}

}  // namespace mrdo
