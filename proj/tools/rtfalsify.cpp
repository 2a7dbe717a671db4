#include <iostream>

#include "CLI11.hpp"
#include "rtfalsify/cli.hpp"

namespace cli = rtfalsify::cli;

int main(int argc, char** argv) {
  CLI::App app{"Falsification of requirements tables against simulated models"};
  app.require_subcommand(1);

  std::string check_path;
  auto* check = app.add_subcommand("check", "Parse and validate a requirements table");
  check->add_option("table", check_path, "Table file (.rt)")->required();

  std::string mon_table, mon_trace, mon_out = "degrees.csv";
  auto* monitor = app.add_subcommand("monitor", "Monitor a recorded CSV trace");
  monitor->add_option("table", mon_table, "Table file (.rt)")->required();
  monitor->add_option("trace", mon_trace, "Trace CSV (t column first)")->required();
  monitor->add_option("--out", mon_out, "Per-step degree CSV");

  cli::RunSpec spec;
  std::string algo = "sa";
  std::vector<std::string> input_specs;
  double horizon = 0.0, dt = 0.0;
  auto* falsify = app.add_subcommand("falsify", "Search for a failure-revealing test case");
  falsify->add_option("--model", spec.model, "Built-in model: omm-v0..omm-v3, plant-demo")->required();
  falsify->add_option("--table", spec.table_path, "Table file (.rt)")->required();
  falsify->add_option("--algo", algo, "ur (uniform random) or sa (simulated annealing)")
      ->check(CLI::IsMember({"ur", "sa"}));
  falsify->add_option("--budget", spec.search.budget, "Maximum iterations per run");
  falsify->add_option("--seed", spec.search.seed, "Random seed");
  falsify->add_option("--runs", spec.runs, "Independent runs with seeds seed, seed+1, ...");
  falsify->add_option("--out", spec.out_dir, "Output directory");
  falsify->add_option("--input", input_specs, "<name>:<lo>:<hi>[:k], k discontinuities (default 1)");
  auto* horizon_opt = falsify->add_option("--horizon", horizon, "Simulation horizon in seconds");
  auto* dt_opt      = falsify->add_option("--dt", dt, "Step size in seconds");
  falsify->add_option("--sa-temperature", spec.search.annealing.initial_temperature, "Initial SA temperature");
  falsify->add_option("--sa-cooling", spec.search.annealing.cooling, "Geometric cooling factor per iteration");
  falsify->add_option("--sa-scale", spec.search.annealing.proposal_scale, "Proposal std-dev as a fraction of range");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsage;
  }

  if (*check) return cli::cmd_check(check_path, std::cout, std::cerr);
  if (*monitor) return cli::cmd_monitor(mon_table, mon_trace, mon_out, std::cout, std::cerr);

  try {
    spec.search.algorithm =
        algo == "ur" ? rtfalsify::Algorithm::uniform_random : rtfalsify::Algorithm::simulated_annealing;
    for (const auto& s : input_specs) spec.inputs.push_back(cli::parse_input_spec(s));
    if (*horizon_opt) spec.horizon = horizon;
    if (*dt_opt) spec.dt = dt;
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return cli::kUsage;
  }
  return cli::cmd_falsify(spec, std::cout, std::cerr);
}
