#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "mrdo/bounds.hpp"
#include "mrdo/cli.hpp"
#include "mrdo/errors.hpp"
#include "mrdo/kernels.hpp"
#include "mrdo/rng.hpp"

namespace fs = std::filesystem;

namespace mrdo {

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw ConfigError("io: cannot write " + p.string());
  out << text;
}

Json trace_meta_json(const ExperimentConfig& c, const Trace& t) {
  Json j;
  j["config"] = to_json(c);
  j["status"] = t.status;
  j["last_finite_t"] = t.last_finite_t;
  j["rows"] = t.rows.size();
  j["meta"] = Json::object();
  for (const auto& [k, v] : t.meta) j["meta"][k] = v;
  if (!t.rows.empty()) {
    j["final_gap"] = t.rows.back().gap;
    j["min_gap"] = t.rows.back().min_gap;
  }
  return j;
}

}  // namespace

RunResult run_to_directory(const ExperimentConfig& c, const std::string& out_dir) {
  Trace t = run(c);
  fs::create_directories(out_dir);
  write_trace_csv(t, (fs::path(out_dir) / "trace.csv").string());
  write_text(fs::path(out_dir) / "meta.json", trace_meta_json(c, t).dump(2) + "\n");
  return {std::move(t), out_dir};
}

int cmd_run(const std::string& config_path, const std::string& out_override, std::ostream& log) {
  try {
    ExperimentConfig c = load_config(config_path);
    if (!out_override.empty()) c.output = out_override;
    RunResult r = run_to_directory(c, c.output);
    for (const auto& [k, v] : r.trace.meta)
      if (k.rfind("warning_", 0) == 0) log << "warning: " << v << "\n";
    log << "status: " << r.trace.status;
    if (!r.trace.rows.empty()) log << "  final gap: " << r.trace.rows.back().gap;
    log << "  rows: " << r.trace.rows.size() << "  output: " << r.output_dir << "\n";
    if (r.trace.status == "diverged") {
      log << "error: divergence, last finite t = " << r.trace.last_finite_t << "\n";
      return kExitNumeric;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    log << "error: " << e.what() << " (last finite t = " << e.last_finite_t() << ")\n";
    return kExitNumeric;
  } catch (const InfeasibleError& e) {
    log << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

// ---- verify ----

std::vector<PropertyCertificate> verify_algorithm(const VerifyOptions& o) {
  const GraphSpec gs = parse_graph_spec(o.graph);
  bool seed_set = false, n_set = false;
  ProblemSpec ps = parse_problem_spec(o.problem, &seed_set, &n_set);
  const GraphModel graph = build_graph(gs, o.seed);
  if (n_set && !ps.curvatures && ps.n != graph.n_agents())
    throw ConfigError("verify: 'problem.n' must equal the graph size");
  const ObjectiveSuite suite = build_problem(ps, graph.n_agents(), seed_set ? std::nullopt : std::optional(o.seed));
  const AlgorithmDescriptor desc = catalog(o.algorithm, graph, suite, o.params);

  std::vector<PropertyCertificate> out;
  const auto g = verify_gcfl(desc.gcfl, suite.dim, o.n_samples, o.seed);
  const auto l = verify_lcfl(desc.lcfl, suite, o.n_samples, splitmix64(o.seed));
  out.push_back(g.p1);
  out.push_back(g.p2);
  out.push_back(l.p3);
  out.push_back(l.p4);
  if (!o.with_p5) return out;

  PropertyCertificate p5;
  p5.property = "P5-empirical";
  p5.seed = o.seed;
  if (!desc.gcfl.persistent()) {
    p5.passed = false;
    p5.note =
        "failed by design: the averaging GCFL is a Dirac impulse at sampling instants, not a persistent "
        "feedback, so the algorithm cannot be mapped to a continuous-time double-feedback system and no "
        "energy descent is certified";
    out.push_back(p5);
    return out;
  }
  if (desc.native_only) {
    p5.passed = false;
    p5.note = "not certified: only the native discrete update is shipped (continuous form: " + desc.continuous_form +
              ")";
    out.push_back(p5);
    return out;
  }
  // Short continuous reference with eta_g = 1 and eta_l = eta_l0 / sqrt(T).
  const double T = 20.0;
  RunSpec spec;
  spec.scheme.case_tag = Case::continuous;
  spec.scheme.tau_g = spec.scheme.tau_l = 0.0;
  spec.scheme.micro_step = 0.01;
  spec.gains = GainSchedule::one_over_sqrt_T(1.0, desc.eta_l, T);
  spec.horizon = T;
  spec.mode = RunMode::controller;
  Rng rng(splitmix64(o.seed ^ 0x5eedULL));
  Mat x0(suite.n_agents(), suite.dim);
  for (Eigen::Index j = 0; j < x0.cols(); ++j)
    for (Eigen::Index i = 0; i < x0.rows(); ++i) x0(i, j) = rng.normal();
  const Trace t = simulate(desc, suite, x0, spec);
  p5 = verify_energy_descent(t, 1e-8);
  p5.seed = o.seed;
  if (t.status == "diverged") {
    p5.passed = false;
    p5.note = "reference run diverged";
  }
  out.push_back(p5);
  return out;
}

std::string certificates_json(const std::string& algorithm, const std::vector<PropertyCertificate>& certs) {
  Json j;
  j["algorithm"] = algorithm;
  j["certificates"] = Json::array();
  for (const auto& c : certs) j["certificates"].push_back(Json::parse(to_json(c)));
  return j.dump(2);
}

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& log) {
  try {
    const auto certs = verify_algorithm(o);
    out << certificates_json(o.algorithm, certs) << "\n";
    for (const auto& c : certs)
      log << c.property << ": " << (c.passed ? "pass" : "fail") << "  estimate " << c.estimate << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

// ---- bounds ----

std::string bounds_json(const std::string& case_name, const Json& k) {
  static const std::set<std::string> allowed = {"gamma1", "gamma2", "C_x", "C_v", "C_z", "C_g", "L",
                                                 "L_f",    "N",      "eta_l", "eta_g", "Q", "safety"};
  if (!k.is_object()) throw ConfigError("bounds: constants must be a JSON object");
  for (auto it = k.begin(); it != k.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("bounds: unknown constant '" + it.key() + "'");
    if (!it.value().is_number()) throw ConfigError("bounds: constant '" + it.key() + "' must be a number");
  }
  auto num = [&](const char* key, double fallback) { return k.contains(key) ? k[key].get<double>() : fallback; };
  BoundConstants c;
  c.c_x = num("C_x", 0.0);
  c.c_v = num("C_v", 0.0);
  c.c_z = num("C_z", 0.0);
  c.c_g = num("C_g", 0.0);
  c.L = num("L", 0.0);
  c.L_f = num("L_f", c.L);
  c.N = num("N", 1.0);
  c.eta_l = num("eta_l", 1.0);
  c.eta_g = num("eta_g", 1.0);
  const double safety = num("safety", 0.9);
  ContinuousRates r;
  if (k.contains("gamma1") || k.contains("gamma2")) {
    if (!k.contains("gamma1") || !k.contains("gamma2")) throw ConfigError("bounds: give both gamma1 and gamma2");
    r = {num("gamma1", 0.0), num("gamma2", 0.0), "user"};
  } else {
    if (!(c.c_g > 0) || !(c.L_f > 0)) throw ConfigError("bounds: need gamma1/gamma2 or C_g with L_f");
    r = dgt_rates(c.c_g, c.L_f);
  }
  std::string cn = case_name;
  std::transform(cn.begin(), cn.end(), cn.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (cn.rfind("case", 0) == 0) cn = cn.substr(4);
  DiscretizationBudget b;
  if (cn == "1" || cn == "i")
    b = case1_budget(r, c, safety);
  else if (cn == "2" || cn == "ii")
    b = case2_budget(r, c, safety);
  else if (cn == "3" || cn == "4" || cn == "34" || cn == "iii" || cn == "iv") {
    std::optional<int> q;
    if (k.contains("Q")) q = static_cast<int>(k["Q"].get<double>());
    b = case34_budget(r, c, q, safety);
  } else {
    throw ConfigError("bounds: unknown case '" + case_name + "' (expected 1, 2, 3 or 4)");
  }
  Json j = Json::parse(to_json(b));
  j["rates"] = {{"gamma1", r.gamma1}, {"gamma2", r.gamma2}, {"source", r.source}};
  return j.dump(2);
}

int cmd_bounds(const std::string& case_name, const std::string& constants, std::ostream& out, std::ostream& log) {
  try {
    const std::string text = bounds_json(case_name, read_json_arg(constants));
    out << text << "\n";
    for (const auto& w : Json::parse(text)["warnings"]) log << "warning: " << w.get<std::string>() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    log << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

// ---- sweep ----

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t index) {
  return splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

std::vector<Json> expand_axes(const Json& axes) {
  if (!axes.is_object() || axes.empty()) throw ConfigError("sweep: 'axes' must be a non-empty object");
  std::vector<Json> cells{Json::object()};
  for (auto it = axes.begin(); it != axes.end(); ++it) {
    if (!it.value().is_array() || it.value().empty())
      throw ConfigError("sweep: axis '" + it.key() + "' must be a non-empty list");
    std::vector<Json> next;
    for (const auto& cell : cells)
      for (const auto& v : it.value()) {
        Json c = cell;
        c[it.key()] = v;
        next.push_back(std::move(c));
      }
    cells = std::move(next);
  }
  return cells;
}

Json apply_override(Json base, const std::string& dotted, const Json& value) {
  Json* node = &base;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("sweep: malformed axis path '" + dotted + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return base;
    }
    if (!node->contains(key)) (*node)[key] = Json::object();
    node = &(*node)[key];
    // "algorithm": "name" is shorthand for {"name": "name"}.
    if (node->is_string() && node == &base["algorithm"]) *node = Json{{"name", node->get<std::string>()}};
    if (!node->is_object()) throw ConfigError("sweep: axis path '" + dotted + "' crosses a non-object");
    start = dot + 1;
  }
}

std::vector<SweepCell> run_sweep(const Json& sweep, std::ostream& log) {
  static const std::set<std::string> allowed = {"base", "axes", "parallelism", "output"};
  if (!sweep.is_object()) throw ConfigError("sweep: spec must be a JSON object");
  for (auto it = sweep.begin(); it != sweep.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("sweep: unknown key '" + it.key() + "'");
  if (!sweep.contains("base")) throw ConfigError("sweep: missing 'base'");
  const Json base = sweep["base"].is_string() ? read_json_arg(sweep["base"].get<std::string>()) : sweep["base"];
  const std::string out = sweep.value("output", std::string("sweep_out"));
  const int parallelism = sweep.value("parallelism", 1);
  if (parallelism < 1) throw ConfigError("sweep: 'parallelism' must be >= 1");
  const std::uint64_t base_seed = base.value("seed", std::uint64_t{0});

  const std::vector<Json> overrides = expand_axes(sweep.at("axes"));
  std::vector<ExperimentConfig> configs;
  std::vector<SweepCell> cells;
  // Every cell is validated before any is run.
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    Json j = base;
    for (auto it = overrides[i].begin(); it != overrides[i].end(); ++it) j = apply_override(j, it.key(), it.value());
    const std::uint64_t seed = cell_seed(base_seed, i);
    j["seed"] = seed;
    j["output"] = (fs::path(out) / ("cell_" + std::to_string(i))).string();
    try {
      configs.push_back(parse_config(j));
    } catch (const ConfigError& e) {
      throw ConfigError("sweep: cell " + std::to_string(i) + ": " + e.what());
    }
    cells.push_back({i, seed, overrides[i], "", 0.0, 0.0, ""});
  }
  const int threads = std::max(1, std::min(parallelism, thread_limit()));
  log << "cells: " << cells.size() << "  threads: " << threads << "\n" << std::flush;

  const long n_cells = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n_cells; ++i) {
    SweepCell& cell = cells[i];
    try {
      const RunResult r = run_to_directory(configs[i], configs[i].output);
      cell.status = r.trace.status;
      cell.final_gap = r.trace.rows.empty() ? NAN : r.trace.rows.back().gap;
      cell.min_gap = r.trace.rows.empty() ? NAN : r.trace.rows.back().min_gap;
    } catch (const std::exception& e) {
      cell.status = "error";
      cell.error = e.what();
    }
  }

  fs::create_directories(out);
  std::ofstream csv(fs::path(out) / "summary.csv");
  csv << std::setprecision(17) << "cell,seed";
  for (auto it = overrides.front().begin(); it != overrides.front().end(); ++it) csv << "," << it.key();
  csv << ",status,final_gap,min_gap\n";
  for (const auto& c : cells) {
    csv << c.index << "," << c.seed;
    for (auto it = c.overrides.begin(); it != c.overrides.end(); ++it) csv << "," << it.value().dump();
    csv << "," << c.status << "," << c.final_gap << "," << c.min_gap << "\n";
    if (!c.error.empty()) log << "cell " << c.index << ": " << c.error << "\n";
  }
  return cells;
}

int cmd_sweep(const std::string& sweep_path, std::ostream& log) {
  try {
    const auto cells = run_sweep(read_json_arg(sweep_path), log);
    const auto failed = std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return c.status == "error"; });
    const auto diverged =
        std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return c.status == "diverged"; });
    log << "done: " << cells.size() << " cells, " << diverged << " diverged, " << failed << " errors\n";
    return failed ? kExitNumeric : kExitOk;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

// ---- plot ----

int cmd_plot(const std::vector<std::string>& traces, const std::string& quantity, const std::string& output,
             std::ostream& log) {
  static const std::set<std::string> quantities = {"gap", "min_gap", "energy", "grad_avg_sq", "consensus_sq"};
  try {
    if (!quantities.count(quantity)) throw ConfigError("plot: unknown quantity '" + quantity + "'");
    if (traces.empty()) throw ConfigError("plot: no traces given");
    std::vector<PlotSeries> series;
    for (const auto& path : traces) {
      const Trace t = read_trace_csv(path);
      PlotSeries s;
      s.label = fs::path(path).parent_path().filename().string();
      if (s.label.empty()) s.label = fs::path(path).stem().string();
      const fs::path meta = fs::path(path).parent_path() / "meta.json";
      if (fs::exists(meta)) {
        std::ifstream in(meta);
        const Json m = Json::parse(in, nullptr, false);
        if (!m.is_discarded() && m.contains("meta")) {
          const Json& mm = m["meta"];
          if (mm.contains("algorithm")) s.label = mm["algorithm"].get<std::string>();
          if (mm.contains("case")) s.label += " (case " + mm["case"].get<std::string>() + ")";
        }
      }
      for (const auto& r : t.rows) {
        s.t.push_back(r.t);
        s.value.push_back(quantity == "gap"            ? r.gap
                          : quantity == "min_gap"      ? r.min_gap
                          : quantity == "energy"       ? r.energy
                          : quantity == "grad_avg_sq"  ? r.grad_avg_sq
                                                       : r.consensus_sq);
      }
      series.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < series.size(); ++i)
      for (std::size_t j = 0; j < series.size(); ++j)
        if (i != j && series[i].label == series[j].label) {
          for (std::size_t k = 0; k < series.size(); ++k)
            series[k].label += " [" + fs::path(traces[k]).parent_path().filename().string() + "]";
          i = j = series.size();
        }
    bool log_scale = true;
    for (const auto& s : series)
      for (double v : s.value)
        if (!(v > 0)) log_scale = false;
    if (!log_scale) log << "warning: nonpositive values, using a linear axis\n";
    write_text(output, render_svg(series, quantity, log_scale));
    log << "wrote " << output << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace mrdo
