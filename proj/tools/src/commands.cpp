#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "hmfg/csv.hpp"
#include "hmfg/hypergraph.hpp"

namespace hmfg::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using csv::format_double;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string str(long long v) { return std::to_string(v); }

fs::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  fs::path dir = options.out_dir.empty() ? fs::path(config.output_dir) : fs::path(options.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_file(path, s.str());
}

json base_meta(const char* command, const MfgProblem& problem) {
  return {{"command", command},
          {"tool", "hmfg"},
          {"tool_version", kToolVersion},
          {"states", problem.states},
          {"actions", problem.actions},
          {"horizon", problem.horizon},
          {"index_base", 0},
          {"grid_points", "alpha_i = (i + 0.5) / M"},
          {"agent_alpha", "alpha_i = (i + 1) / N"},
          {"best_response_tie_break", "lowest action index"}};
}

void write_meta(const fs::path& dir, const ExperimentConfig& config, json meta) {
  auto doc = to_json(config);
  doc["meta"] = std::move(meta);
  write_file(dir / "run_meta.json", doc.dump(2) + "\n");
}

json solver_meta(const ExperimentConfig& config, const SolverResult& result) {
  json m = {{"method", to_string(config.solver.method)},
            {"converged", result.converged},
            {"iterations_run", result.diagnostics.empty() ? 0 : result.diagnostics.back().iteration}};
  if (!result.diagnostics.empty()) m["final_exploitability"] = result.diagnostics.back().exploitability;
  if (config.solver.method == SolverMethod::omd)
    m["omd"] = {{"learning_rate", config.solver.learning_rate},
                {"temperature", config.solver.temperature},
                {"temperature_decay", "none"},
                {"initial_policy", "uniform"}};
  else
    m["fixed_point"] = {{"damping", config.solver.damping},
                        {"tolerance", config.solver.tolerance},
                        {"initial_policy", "uniform"}};
  return m;
}

[[noreturn]] void input_error(const std::string& message, const std::string& file) {
  throw ConfigError("input_error", message + " (" + file + ")");
}

csv::Table read_table(const std::string& path) {
  if (!fs::exists(path)) input_error("missing input file", path);
  try {
    return csv::read_file(path);
  } catch (const std::exception& e) {
    input_error(e.what(), path);
  }
}

int cell_int(const csv::Table& table, std::size_t row, std::size_t col, int lo, int hi, const std::string& path) {
  long long v = 0;
  try {
    v = csv::parse_int(table.rows[row][col]);
  } catch (const std::exception&) {
    input_error("row " + str(static_cast<long long>(row) + 2) + ": '" + table.rows[row][col] + "' is not an integer", path);
  }
  if (v < lo || v >= hi)
    input_error("row " + str(static_cast<long long>(row) + 2) + ": column '" + table.header[col] + "' value " +
                    str(v) + " outside [0, " + str(hi) + ")",
                path);
  return static_cast<int>(v);
}

double cell_double(const csv::Table& table, std::size_t row, std::size_t col, const std::string& path) {
  try {
    return csv::parse_double(table.rows[row][col]);
  } catch (const std::exception&) {
    input_error("row " + str(static_cast<long long>(row) + 2) + ": '" + table.rows[row][col] + "' is not a number", path);
  }
}

std::size_t column(const csv::Table& table, const char* name, const std::string& path) {
  try {
    return table.column(name);
  } catch (const std::exception&) {
    input_error(std::string("missing column '") + name + "'", path);
  }
}

}  // namespace

void write_mean_field_csv(std::ostream& out, const MeanFieldEnsemble& mf) {
  csv::write_row(out, {"alpha_index", "t", "state", "probability"});
  for (int i = 0; i < mf.resolution(); ++i)
    for (int t = 0; t <= mf.horizon(); ++t)
      for (int x = 0; x < mf.num_states(); ++x) csv::write_row(out, {str(i), str(t), str(x), format_double(mf(i, t, x))});
}

void write_policy_csv(std::ostream& out, const PolicyEnsemble& policy) {
  csv::write_row(out, {"alpha_index", "t", "state", "action", "probability"});
  for (int i = 0; i < policy.resolution(); ++i)
    for (int t = 0; t < policy.horizon(); ++t)
      for (int x = 0; x < policy.num_states(); ++x) {
        auto p = policy.at(i, t, x);
        for (int u = 0; u < policy.num_actions(); ++u)
          csv::write_row(out, {str(i), str(t), str(x), str(u), format_double(p[u])});
      }
}

void write_diagnostics_csv(std::ostream& out, const std::vector<IterationDiagnostics>& rows) {
  csv::write_row(out, {"iteration", "exploitability", "mf_distance_to_previous"});
  for (const auto& r : rows)
    csv::write_row(out, {str(r.iteration), format_double(r.exploitability), format_double(r.mf_distance_to_previous)});
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  csv::write_row(out, {"N", "realization", "delta_mu"});
  for (const auto& r : rows) csv::write_row(out, {str(r.agents), str(r.realization), format_double(r.delta_mu)});
}

void write_convergence_summary_csv(std::ostream& out, const std::vector<ConvergenceSummary>& rows) {
  csv::write_row(out, {"N", "mean", "stderr", "ci95_low", "ci95_high"});
  for (const auto& r : rows)
    csv::write_row(out, {str(r.agents), format_double(r.mean), format_double(r.standard_error),
                         format_double(r.ci95_low), format_double(r.ci95_high)});
}

PolicyEnsemble read_policy_csv(const std::string& path, int resolution, int horizon, int num_states,
                               int num_actions) {
  const auto table = read_table(path);
  const auto ci = column(table, "alpha_index", path), ct = column(table, "t", path),
             cx = column(table, "state", path), cu = column(table, "action", path),
             cp = column(table, "probability", path);
  PolicyEnsemble policy(resolution, horizon, num_states, num_actions);
  const auto expected = static_cast<std::size_t>(resolution) * horizon * num_states * num_actions;
  if (table.rows.size() != expected)
    input_error("expected " + str(static_cast<long long>(expected)) + " policy rows, found " +
                    str(static_cast<long long>(table.rows.size())),
                path);
  std::vector<char> seen(expected, 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int i = cell_int(table, r, ci, 0, resolution, path);
    const int t = cell_int(table, r, ct, 0, horizon, path);
    const int x = cell_int(table, r, cx, 0, num_states, path);
    const int u = cell_int(table, r, cu, 0, num_actions, path);
    const double p = cell_double(table, r, cp, path);
    if (!(p >= 0.0 && p <= 1.0)) input_error("row " + str(static_cast<long long>(r) + 2) + ": probability outside [0,1]", path);
    const auto flat = ((static_cast<std::size_t>(i) * horizon + t) * num_states + x) * num_actions + u;
    if (seen[flat]++) input_error("row " + str(static_cast<long long>(r) + 2) + ": duplicate policy cell", path);
    policy.at(i, t, x)[u] = p;
  }
  for (int i = 0; i < resolution; ++i)
    for (int t = 0; t < horizon; ++t)
      for (int x = 0; x < num_states; ++x) {
        double sum = 0.0;
        for (double p : policy.at(i, t, x)) sum += p;
        if (std::abs(sum - 1.0) > 1e-9)
          input_error("policy at alpha_index " + str(i) + ", t " + str(t) + ", state " + str(x) +
                          " does not sum to 1",
                      path);
      }
  return policy;
}

MeanFieldEnsemble read_mean_field_csv(const std::string& path, int resolution, int horizon, int num_states) {
  const auto table = read_table(path);
  const auto ci = column(table, "alpha_index", path), ct = column(table, "t", path),
             cx = column(table, "state", path), cp = column(table, "probability", path);
  MeanFieldEnsemble mf(resolution, horizon, num_states);
  const auto expected = static_cast<std::size_t>(resolution) * (horizon + 1) * num_states;
  if (table.rows.size() != expected)
    input_error("expected " + str(static_cast<long long>(expected)) + " mean field rows, found " +
                    str(static_cast<long long>(table.rows.size())),
                path);
  std::vector<char> seen(expected, 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int i = cell_int(table, r, ci, 0, resolution, path);
    const int t = cell_int(table, r, ct, 0, horizon + 1, path);
    const int x = cell_int(table, r, cx, 0, num_states, path);
    const auto flat = (static_cast<std::size_t>(i) * (horizon + 1) + t) * num_states + x;
    if (seen[flat]++) input_error("row " + str(static_cast<long long>(r) + 2) + ": duplicate mean field cell", path);
    mf(i, t, x) = cell_double(table, r, cp, path);
  }
  return mf;
}

SolverResult solve(const ExperimentConfig& config, const MfgProblem& problem, const LayerGrids& grids, int threads) {
  const int m = config.grid.resolution;
  if (config.solver.method == SolverMethod::omd) {
    MirrorDescentOptions o;
    o.iterations = config.solver.iterations;
    o.learning_rate = config.solver.learning_rate;
    o.temperature = config.solver.temperature;
    o.threads = threads;
    return omd_iteration(problem, grids, o);
  }
  FixedPointOptions o;
  o.iterations = config.solver.iterations;
  o.damping = config.solver.damping;
  o.tolerance = config.solver.tolerance;
  o.threads = threads;
  const auto init = PolicyEnsemble::uniform(m, problem.horizon, problem.num_states(), problem.num_actions());
  return fixed_point_iteration(problem, grids, init, o);
}

void run_solve(const ExperimentConfig& config, const RunOptions& options) {
  const auto dir = output_dir(config, options);
  const auto problem = build_problem(config);
  const auto grids = discretize_all(build_hypergraphon(config), config.grid.resolution, options.threads);
  const auto result = solve(config, problem, grids, options.threads);

  write_with(dir / "mean_field.csv", [&](std::ostream& s) { write_mean_field_csv(s, result.mean_field); });
  write_with(dir / "policy.csv", [&](std::ostream& s) { write_policy_csv(s, result.policy); });
  write_with(dir / "diagnostics.csv", [&](std::ostream& s) { write_diagnostics_csv(s, result.diagnostics); });
  auto meta = base_meta("solve", problem);
  meta["solver"] = solver_meta(config, result);
  write_meta(dir, config, std::move(meta));
}

void run_converge(const ExperimentConfig& config, const RunOptions& options) {
  const auto dir = output_dir(config, options);
  const auto problem = build_problem(config);
  const auto hypergraphon = build_hypergraphon(config);
  const int m = config.grid.resolution;

  PolicyEnsemble policy;
  MeanFieldEnsemble mf;
  auto meta = base_meta("converge", problem);
  if (!config.simulation.equilibrium.empty()) {
    const fs::path eq(config.simulation.equilibrium);
    policy = read_policy_csv((eq / "policy.csv").string(), m, problem.horizon, problem.num_states(),
                             problem.num_actions());
    mf = read_mean_field_csv((eq / "mean_field.csv").string(), m, problem.horizon, problem.num_states());
    meta["equilibrium_source"] = eq.string();
  } else {
    const auto grids = discretize_all(hypergraphon, m, options.threads);
    auto result = solve(config, problem, grids, options.threads);
    meta["solver"] = solver_meta(config, result);
    policy = std::move(result.policy);
    mf = std::move(result.mean_field);
  }

  ConvergenceOptions co;
  co.sizes = config.simulation.sizes;
  co.realizations = config.simulation.realizations;
  co.seed = config.simulation.seed;
  co.alpha_mode = config.simulation.alpha_mode;
  co.threads = options.threads;

  std::ofstream traj;
  if (options.trajectories) {
    traj.open(dir / "trajectories.jsonl", std::ios::binary | std::ios::trunc);
    if (!traj) throw std::runtime_error("cannot write trajectories.jsonl");
    co.on_run = [&traj](int realization, const SimulationRun& run) {
      for (int i = 0; i < run.agents; ++i)
        for (int t = 0; t <= run.horizon; ++t) {
          traj << "{\"N\":" << run.agents << ",\"realization\":" << realization << ",\"agent\":" << i
               << ",\"t\":" << t << ",\"state\":" << run.state(i, t) << ",\"action\":";
          if (t < run.horizon) traj << run.action(i, t);
          else traj << "null";
          traj << "}\n";
        }
    };
  }

  const auto result = delta_mu_experiment(problem, hypergraphon, policy, mf, co);
  write_with(dir / "convergence.csv", [&](std::ostream& s) { write_convergence_csv(s, result.rows); });
  write_with(dir / "convergence_summary.csv",
             [&](std::ostream& s) { write_convergence_summary_csv(s, result.summary); });
  meta["seeds"] = {{"hypergraph", "derive_seed(seed, {N, realization, 0})"},
                   {"simulation", "derive_seed(seed, {N, realization, 1})"}};
  meta["delta_mu_time_range"] = "t = 0..T-1";
  write_meta(dir, config, std::move(meta));
}

void run_sample(const ExperimentConfig& config, const RunOptions& options) {
  const auto dir = output_dir(config, options);
  const auto graph = sample(build_hypergraphon(config), config.sample.vertices, config.sample.seed,
                            config.sample.alpha_mode);
  write_file(dir / "hypergraph.json", to_json(graph) + "\n");
  json meta = {{"command", "sample"}, {"tool", "hmfg"}, {"tool_version", kToolVersion}, {"index_base", 0}};
  json counts = json::array();
  for (std::size_t d = 0; d < graph.depth(); ++d) {
    const auto grid = step_hypergraphon(graph, d);
    counts.push_back({{"k", graph.layer(d).cardinality()},
                      {"edges", graph.layer(d).edge_count()},
                      {"density", layer_density(grid)}});
  }
  meta["layers"] = counts;
  write_meta(dir, config, std::move(meta));
}

void run_exploitability(const ExperimentConfig& config, const RunOptions& options, std::ostream& stdout_stream) {
  const auto dir = output_dir(config, options);
  const auto problem = build_problem(config);
  const int m = config.grid.resolution;
  const std::string path = options.policy_path.empty() ? (dir / "policy.csv").string() : options.policy_path;
  const auto policy = read_policy_csv(path, m, problem.horizon, problem.num_states(), problem.num_actions());
  const auto grids = discretize_all(build_hypergraphon(config), m, options.threads);
  const auto prop = forward_propagate(problem, grids, policy, options.threads);
  const auto e = exploitability(problem, prop.neighborhoods, policy, options.threads);

  write_with(dir / "exploitability.csv", [&](std::ostream& s) {
    csv::write_row(s, {"alpha_index", "exploitability"});
    for (std::size_t i = 0; i < e.per_grid_point.size(); ++i)
      csv::write_row(s, {str(static_cast<long long>(i)), format_double(e.per_grid_point[i])});
  });
  stdout_stream << json{{"exploitability", e.value}, {"policy", path}}.dump() << "\n";
}

void run_plotdata(const ExperimentConfig& config, const RunOptions& options) {
  const auto dir = output_dir(config, options);
  const fs::path src = options.source_dir.empty() ? dir : fs::path(options.source_dir);
  const auto problem = build_problem(config);
  const int m = config.grid.resolution;
  const auto policy = read_policy_csv((src / "policy.csv").string(), m, problem.horizon, problem.num_states(),
                                      problem.num_actions());
  const auto mf = read_mean_field_csv((src / "mean_field.csv").string(), m, problem.horizon, problem.num_states());
  const auto out = dir / "plotdata";
  fs::create_directories(out);

  write_with(out / "policy_heatmap.csv", [&](std::ostream& s) {
    csv::write_row(s, {"alpha", "t", "state", "state_name", "action", "action_name", "probability"});
    for (int x = 0; x < problem.num_states(); ++x)
      for (int u = 0; u < problem.num_actions(); ++u)
        for (int t = 0; t < problem.horizon; ++t)
          for (int i = 0; i < m; ++i)
            csv::write_row(s, {format_double(grid_point(i, m)), str(t), str(x), problem.states[x], str(u),
                               problem.actions[u], format_double(policy.at(i, t, x)[u])});
  });
  write_with(out / "mean_field_heatmap.csv", [&](std::ostream& s) {
    csv::write_row(s, {"alpha", "t", "state", "state_name", "probability"});
    for (int x = 0; x < problem.num_states(); ++x)
      for (int t = 0; t <= problem.horizon; ++t)
        for (int i = 0; i < m; ++i)
          csv::write_row(s, {format_double(grid_point(i, m)), str(t), str(x), problem.states[x],
                             format_double(mf(i, t, x))});
  });
  write_with(out / "mean_field_aggregate.csv", [&](std::ostream& s) {
    csv::write_row(s, {"t", "state", "state_name", "probability"});
    for (int t = 0; t <= problem.horizon; ++t)
      for (int x = 0; x < problem.num_states(); ++x)
        csv::write_row(s, {str(t), str(x), problem.states[x], format_double(mf.average(t, x))});
  });
  if (fs::exists(src / "diagnostics.csv")) fs::copy_file(src / "diagnostics.csv", out / "exploitability_curve.csv", fs::copy_options::overwrite_existing);
  if (fs::exists(src / "convergence_summary.csv"))
    fs::copy_file(src / "convergence_summary.csv", out / "convergence_curve.csv", fs::copy_options::overwrite_existing);

  const auto grids = discretize_all(build_hypergraphon(config), m, options.threads);
  for (std::size_t d = 0; d < grids.size(); ++d)
    write_with(out / ("kernel_layer" + std::to_string(d) + ".csv"),
               [&](std::ostream& s) { write_grid_csv(s, grids[d]); });
}

}  // namespace hmfg::cli
