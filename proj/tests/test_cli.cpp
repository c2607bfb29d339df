#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mrdo/cli.hpp"
#include "mrdo/config.hpp"
#include "mrdo/errors.hpp"

using namespace mrdo;
namespace fs = std::filesystem;

namespace {

Json small_config(const std::string& out) {
  Json j = Json::parse(R"({
    "graph": {"type": "path", "n": 3},
    "problem": {"kind": "logistic", "m": 20, "d": 2, "seed": 1},
    "algorithm": {"name": "dgt", "params": {"c": 0.3}},
    "scheme": {"case": "III", "tau_g": 1.0, "tau_l": 1.0},
    "horizon": 50,
    "seed": 2
  })");
  j["output"] = out;
  return j;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mrdo_test_" + name);
  fs::remove_all(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("config rejects unknown keys") {
  Json j = small_config("out");
  j["graph"]["colour"] = "red";
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("unknown key 'graph.colour'"), ConfigError);
  Json k = small_config("out");
  k["horizonn"] = 5;
  CHECK_THROWS_WITH(parse_config(k), doctest::Contains("horizonn"));
}

TEST_CASE("config round trip") {
  const ExperimentConfig c = parse_config(small_config("out/x"));
  const ExperimentConfig d = parse_config(to_json(c));
  CHECK(to_json(c) == to_json(d));
  CHECK(config_hash(c) == config_hash(d));
  CHECK(c.algorithm == "dgt");
  CHECK(c.params.at("c") == 0.3);
  ExperimentConfig e = c;
  e.seed = 99;
  CHECK(config_hash(e) != config_hash(c));
}

TEST_CASE("shipped config loads") {
  const ExperimentConfig c = load_config(std::string(MRDO_SOURCE_DIR) + "/configs/dgt.json");
  CHECK(c.graph.n == 20);
  CHECK(c.problem.m == 500);
  CHECK(c.algorithm == "dgt");
  const Experiment e = build_experiment(c);
  CHECK(e.suite.n_agents() == 20);
  CHECK(e.x0.rows() == 20);
  CHECK(e.x0.cols() == 10);
}

TEST_CASE("sweep helpers") {
  CHECK(cell_seed(1, 0) == cell_seed(1, 0));
  CHECK(cell_seed(1, 0) != cell_seed(1, 1));
  CHECK(cell_seed(1, 0) != cell_seed(2, 0));
  const auto cells = expand_axes(Json{{"algorithm", {"dgt", "dgd"}}, {"graph.n", {3, 4, 5}}});
  CHECK(cells.size() == 6);
  std::set<std::string> distinct;
  for (const auto& c : cells) distinct.insert(c.dump());
  CHECK(distinct.size() == 6);
  const Json o = apply_override(small_config("out"), "graph.n", 7);
  CHECK(o["graph"]["n"] == 7);
  const Json p = apply_override(small_config("out"), "algorithm", "dgd");
  CHECK(p["algorithm"] == "dgd");
  const Json q = apply_override(small_config("out"), "algorithm.params.c", 0.1);
  CHECK(q["algorithm"]["params"]["c"] == 0.1);
}

TEST_CASE("bounds command") {
  const auto j = Json::parse(bounds_json("IV", Json{{"C_g", 0.3}, {"L_f", 1.0}, {"C_x", 1}, {"C_v", 2}, {"C_z", 1},
                                                    {"L", 1.6}, {"N", 20}}));
  CHECK(j.at("Q") == 3);
  CHECK(j.contains("rates"));
  std::ostringstream out, log;
  CHECK(cmd_bounds("VII", R"({"C_g": 0.3, "L_f": 1})", out, log) == kExitConfig);
  CHECK(cmd_bounds("case1", R"({"C_g": 0.3, "L_f": 1, "C_x": 1, "C_v": 2, "L": 1.6, "N": 20})", out, log) ==
        kExitOk);
}

TEST_CASE("run command writes a trace and metadata") {
  const fs::path dir = scratch("run");
  fs::create_directories(dir);
  write_file(dir / "cfg.json", small_config((dir / "out").string()).dump());
  std::ostringstream log;
  CHECK(cmd_run((dir / "cfg.json").string(), "", log) == kExitOk);
  CHECK(fs::exists(dir / "out" / "trace.csv"));
  const Json meta = Json::parse(std::ifstream(dir / "out" / "meta.json"));
  CHECK(meta.at("meta").contains("config_hash"));
  CHECK(meta.at("status") == "horizon");
  CHECK(read_trace_csv((dir / "out" / "trace.csv").string()).rows.size() == 51);

  Json bad = small_config((dir / "bad").string());
  bad["algorithm"]["params"]["c"] = -1;
  write_file(dir / "bad.json", bad.dump());
  CHECK(cmd_run((dir / "bad.json").string(), "", log) == kExitConfig);

  Json boom = small_config((dir / "boom").string());
  // Quadratic gradients grow without bound, so an oversized step diverges.
  boom["problem"] = Json{{"kind", "quadratic"}, {"d", 2}, {"seed", 1}};
  boom["algorithm"] = Json{{"name", "dgd"}, {"params", {{"c", 100.0}}}};
  write_file(dir / "boom.json", boom.dump());
  CHECK(cmd_run((dir / "boom.json").string(), "", log) == kExitNumeric);
  fs::remove_all(dir);
}

TEST_CASE("sweep command") {
  const fs::path dir = scratch("sweep");
  fs::create_directories(dir);
  Json sweep{{"base", small_config("unused")},
             {"axes", {{"algorithm", {"dgt", "dgd"}}, {"horizon", {10, 20}}}},
             {"parallelism", 2},
             {"output", (dir / "out").string()}};
  write_file(dir / "sweep.json", sweep.dump());
  std::ostringstream log;
  CHECK(cmd_sweep((dir / "sweep.json").string(), log) == kExitOk);
  CHECK(log.str().find("cells: 4") != std::string::npos);
  std::ifstream summary(dir / "out" / "summary.csv");
  std::string line;
  int lines = 0;
  while (std::getline(summary, line)) ++lines;
  CHECK(lines == 5);
  for (int i = 0; i < 4; ++i) CHECK(fs::exists(dir / "out" / ("cell_" + std::to_string(i)) / "trace.csv"));
  fs::remove_all(dir);
}

TEST_CASE("plot output escapes labels") {
  const std::string svg = render_svg({{"a<b & c", {1, 2, 3}, {1.0, 0.1, 0.01}}}, "gap");
  CHECK(svg.find("a&lt;b &amp; c") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.rfind("</svg>") != std::string::npos);
}

TEST_CASE("verify reports the impulse limitation for fedavg") {
  VerifyOptions o;
  o.algorithm = "fedavg";
  o.n_samples = 100;
  const auto certs = verify_algorithm(o);
  REQUIRE(certs.size() == 5);
  CHECK(certs[0].passed);
  CHECK_FALSE(certs[4].passed);
  CHECK(certs[4].note.find("persistent") != std::string::npos);
}
