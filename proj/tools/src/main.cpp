#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

void report(const std::string& kind, const std::string& message, const std::string& path, const std::string& file) {
  nlohmann::json err = {{"error", kind}, {"message", message}, {"path", path}, {"file", file}};
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hmfg::cli;

  CLI::App app{"Mean field games on multi-layer hypergraphons"};
  app.require_subcommand(1);
  RunOptions opts;

  auto add_common = [&opts](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "Experiment config (JSON)")->required();
    cmd->add_option("--out", opts.out_dir, "Output directory (overrides output.dir)");
    cmd->add_option("--threads", opts.threads, "Worker threads")->check(CLI::Range(1, 1024));
  };
  auto* solve = app.add_subcommand("solve", "Compute an equilibrium and write mean field, policy and diagnostics");
  auto* converge = app.add_subcommand("converge", "Simulate finite games and measure the mean field approximation error");
  auto* sample = app.add_subcommand("sample", "Sample a finite hypergraph from the configured hypergraphon");
  auto* exploit = app.add_subcommand("exploitability", "Evaluate the exploitability of a stored policy");
  auto* plotdata = app.add_subcommand("plotdata", "Re-export solver artifacts in plot-ready long format");
  for (auto* cmd : {solve, converge, sample, exploit, plotdata}) add_common(cmd);
  converge->add_flag("--trajectories", opts.trajectories, "Also write trajectories.jsonl");
  exploit->add_option("--policy", opts.policy_path, "policy.csv to evaluate (default <out>/policy.csv)");
  plotdata->add_option("--from", opts.source_dir, "Directory with policy.csv and mean_field.csv (default <out>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report("usage_error", e.what(), "", "");
    return 2;
  }

  try {
    const auto config = load_config(opts.config_path);
    if (solve->parsed()) run_solve(config, opts);
    else if (converge->parsed()) run_converge(config, opts);
    else if (sample->parsed()) run_sample(config, opts);
    else if (exploit->parsed()) run_exploitability(config, opts, std::cout);
    else if (plotdata->parsed()) run_plotdata(config, opts);
  } catch (const ConfigError& e) {
    report(e.kind(), e.what(), e.path(), e.kind() == "input_error" ? "" : opts.config_path);
    return 2;
  } catch (const std::exception& e) {
    report("runtime_error", e.what(), "", opts.config_path);
    return 1;
  }
  return 0;
}
