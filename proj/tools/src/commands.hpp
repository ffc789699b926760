#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "hmfg/meanfield.hpp"
#include "hmfg/simulate.hpp"

namespace hmfg::cli {

struct RunOptions {
  std::string config_path;
  /// Overrides output.dir when non-empty.
  std::string out_dir;
  int threads = 1;
  /// converge: also dump per-agent trajectories as JSON lines.
  bool trajectories = false;
  /// exploitability: policy CSV to evaluate (default <out>/policy.csv).
  std::string policy_path;
  /// plotdata: directory holding solver artifacts (default <out>).
  std::string source_dir;
};

// Artifact writers and readers. Indices are 0-based, probabilities use the
// shortest round-trip decimal form.
void write_mean_field_csv(std::ostream& out, const MeanFieldEnsemble& mf);
void write_policy_csv(std::ostream& out, const PolicyEnsemble& policy);
void write_diagnostics_csv(std::ostream& out, const std::vector<IterationDiagnostics>& rows);
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_convergence_summary_csv(std::ostream& out, const std::vector<ConvergenceSummary>& rows);

/// Reads policy.csv / mean_field.csv and checks that every cell of the
/// expected shape is present exactly once.
PolicyEnsemble read_policy_csv(const std::string& path, int resolution, int horizon, int num_states,
                               int num_actions);
MeanFieldEnsemble read_mean_field_csv(const std::string& path, int resolution, int horizon,
                                      int num_states);

/// Runs the configured solver from the uniform policy.
SolverResult solve(const ExperimentConfig& config, const MfgProblem& problem, const LayerGrids& grids,
                   int threads);

void run_solve(const ExperimentConfig& config, const RunOptions& options);
void run_converge(const ExperimentConfig& config, const RunOptions& options);
void run_sample(const ExperimentConfig& config, const RunOptions& options);
/// Prints {"exploitability": value} on stdout and writes exploitability.csv.
void run_exploitability(const ExperimentConfig& config, const RunOptions& options, std::ostream& stdout_stream);
void run_plotdata(const ExperimentConfig& config, const RunOptions& options);

}  // namespace hmfg::cli
