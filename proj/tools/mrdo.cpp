#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrdo/cli.hpp"
#include "mrdo/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Double-feedback simulator for distributed optimization algorithms"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "Simulate one experiment config");
  run->add_option("config", config_path, "experiment JSON")->required();
  run->add_option("-o,--output", out_dir, "output directory (overrides the config)");

  mrdo::VerifyOptions vo;
  std::string graph_arg, problem_arg;
  std::vector<std::string> param_args;
  bool no_p5 = false;
  auto* verify = app.add_subcommand("verify", "Certify properties P1-P5 for a catalog algorithm");
  verify->add_option("algorithm", vo.algorithm)->required();
  verify->add_option("--graph", graph_arg, "graph JSON (inline or file); default path-3 metropolis");
  verify->add_option("--problem", problem_arg, "problem JSON (inline or file)");
  verify->add_option("--param", param_args, "algorithm parameter key=value")->take_all();
  verify->add_option("--samples", vo.n_samples, "random samples per property")->check(CLI::PositiveNumber);
  verify->add_option("--seed", vo.seed);
  verify->add_flag("--no-p5", no_p5, "skip the continuous reference run");

  std::string case_name, constants;
  auto* bounds = app.add_subcommand("bounds", "Sampling-interval budget for a discretization case");
  bounds->add_option("case", case_name, "1, 2, 3 or 4")->required();
  bounds->add_option("constants", constants, "constants JSON (inline or file)")->required();

  std::string sweep_path;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("spec", sweep_path, "sweep JSON")->required();

  std::vector<std::string> traces;
  std::string quantity = "gap", plot_out = "plot.svg";
  auto* plot = app.add_subcommand("plot", "Render traces to SVG");
  plot->add_option("traces", traces, "trace.csv files")->required();
  plot->add_option("--quantity", quantity, "gap, min_gap, energy, grad_avg_sq or consensus_sq");
  plot->add_option("-o,--output", plot_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mrdo::kExitConfig;
  }

  if (*run) return mrdo::cmd_run(config_path, out_dir, std::cerr);
  if (*verify) {
    try {
      if (!graph_arg.empty()) vo.graph = mrdo::read_json_arg(graph_arg);
      if (!problem_arg.empty()) vo.problem = mrdo::read_json_arg(problem_arg);
      for (const auto& kv : param_args) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw mrdo::ConfigError("verify: --param expects key=value, got '" + kv + "'");
        vo.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return mrdo::kExitConfig;
    }
    vo.with_p5 = !no_p5;
    return mrdo::cmd_verify(vo, std::cout, std::cerr);
  }
  if (*bounds) return mrdo::cmd_bounds(case_name, constants, std::cout, std::cerr);
  if (*sweep) return mrdo::cmd_sweep(sweep_path, std::cerr);
  if (*plot) return mrdo::cmd_plot(traces, quantity, plot_out, std::cerr);
  return mrdo::kExitConfig;
}
