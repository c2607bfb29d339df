#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrdo/config.hpp"
#include "mrdo/diagnostics.hpp"

namespace mrdo {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct RunResult {
  Trace trace;
  std::string output_dir;
};

// Writes <out>/trace.csv and <out>/meta.json. Throws ConfigError on bad input.
RunResult run_to_directory(const ExperimentConfig& c, const std::string& out_dir);
int cmd_run(const std::string& config_path, const std::string& out_override, std::ostream& log);

struct VerifyOptions {
  std::string algorithm;
  Json graph = Json{{"type", "path"}, {"n", 3}, {"weights", "metropolis"}};
  Json problem = Json{{"kind", "logistic"}, {"m", 50}, {"d", 3}, {"seed", 0}};
  Params params;
  int n_samples = 200;
  std::uint64_t seed = 0;
  bool with_p5 = true;
};

std::vector<PropertyCertificate> verify_algorithm(const VerifyOptions& o);
std::string certificates_json(const std::string& algorithm, const std::vector<PropertyCertificate>& certs);
int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& log);

// Constants JSON: gamma1/gamma2 (or C_g with L_f for the tracking rates), C_x, C_v,
// C_z, C_g, L, L_f, N, eta_l, eta_g, optional Q.
std::string bounds_json(const std::string& case_name, const Json& constants);
int cmd_bounds(const std::string& case_name, const std::string& constants, std::ostream& out, std::ostream& log);

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t index);

struct SweepCell {
  std::size_t index;
  std::uint64_t seed;
  Json overrides;
  std::string status;
  double final_gap;
  double min_gap;
  std::string error;
};

// Expands the cartesian product of `axes` (dotted key -> list of values).
std::vector<Json> expand_axes(const Json& axes);
Json apply_override(Json base, const std::string& dotted, const Json& value);
std::vector<SweepCell> run_sweep(const Json& sweep, std::ostream& log);
int cmd_sweep(const std::string& sweep_path, std::ostream& log);

struct PlotSeries {
  std::string label;
  std::vector<double> t;
  std::vector<double> value;
};

std::string render_svg(const std::vector<PlotSeries>& series, const std::string& quantity, bool log_scale = true);
int cmd_plot(const std::vector<std::string>& traces, const std::string& quantity, const std::string& output,
             std::ostream& log);

}  // namespace mrdo
