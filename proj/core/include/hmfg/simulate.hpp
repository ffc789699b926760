#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hmfg/game.hpp"
#include "hmfg/hypergraph.hpp"
#include "hmfg/meanfield.hpp"

namespace hmfg {

/// pi_t(u | x) of a single agent.
class AgentPolicy {
 public:
  AgentPolicy() = default;
  AgentPolicy(int horizon, int num_states, int num_actions);

  /// The policy of grid point i of an ensemble.
  static AgentPolicy from_ensemble(const PolicyEnsemble& policy, int grid_index);
  /// Plays `action` everywhere.
  static AgentPolicy constant(int horizon, int num_states, int num_actions, int action);

  int horizon() const { return t_; }
  int num_states() const { return x_; }
  int num_actions() const { return u_; }
  std::span<double> at(int t, int x) {
    return {data_.data() + (static_cast<std::size_t>(t) * x_ + x) * u_, static_cast<std::size_t>(u_)};
  }
  std::span<const double> at(int t, int x) const {
    return {data_.data() + (static_cast<std::size_t>(t) * x_ + x) * u_, static_cast<std::size_t>(u_)};
  }

  bool operator==(const AgentPolicy&) const = default;

 private:
  int t_ = 0, x_ = 0, u_ = 0;
  std::vector<double> data_;
};

/// Graphon position of 0-based agent i among N: the right endpoint (i+1)/N.
inline double agent_alpha(int agent, int agents) { return static_cast<double>(agent + 1) / agents; }

/// 0-based grid point whose interval contains (i+1)/N, i.e. ceil((i+1) M / N) - 1.
int shared_grid_index(int agent, int agents, int resolution);

/// Policy sharing: agent i plays the grid policy at shared_grid_index.
std::vector<AgentPolicy> share_policy(const PolicyEnsemble& policy, int agents);

struct SimulationRun {
  std::shared_ptr<const MultiLayerHypergraph> graph;
  int agents = 0;
  int horizon = 0;
  int num_states = 0;
  std::uint64_t seed = 0;
  /// agents x (horizon + 1), row-major by agent.
  std::vector<int> states;
  /// agents x horizon.
  std::vector<int> actions;

  int state(int agent, int t) const {
    return states[static_cast<std::size_t>(agent) * static_cast<std::size_t>(horizon + 1) + static_cast<std::size_t>(t)];
  }
  int action(int agent, int t) const {
    return actions[static_cast<std::size_t>(agent) * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(t)];
  }

  bool operator==(const SimulationRun& other) const {
    return agents == other.agents && horizon == other.horizon && num_states == other.num_states &&
           seed == other.seed && states == other.states && actions == other.actions;
  }
};

/// nu^{N,i}_{t,d} = N^{-(k_d-1)} sum over incident ordered tuples m of
/// delta at (X^{m_1}_t, ..., X^{m_{k_d-1}}_t). `states` holds every agent's
/// state at one time.
NeighborhoodMeanField empirical_neighborhood_mf(const MultiLayerHypergraph& graph,
                                                const Incidence& incidence,
                                                std::span<const int> states, int num_states,
                                                int agent);
NeighborhoodMeanField empirical_neighborhood_mf(const SimulationRun& run, int agent, int t);

struct Deviation {
  int agent = 0;
  AgentPolicy policy;
};

/// X^i_0 ~ mu0((i+1)/N) i.i.d., then per epoch every agent draws its
/// action, all empirical neighborhoods are taken from the time-t states,
/// and every agent draws its next state.
SimulationRun simulate_game(const MfgProblem& problem,
                            std::shared_ptr<const MultiLayerHypergraph> graph,
                            const std::vector<AgentPolicy>& policies,
                            const std::optional<Deviation>& deviation, std::uint64_t seed);

/// Per time t = 0..T, the fraction of agents in each state.
std::vector<std::vector<double>> empirical_distribution(const SimulationRun& run);

/// sum_x sum_{t<T} |empirical_t(x) - M^{-1} sum_i mu^{alpha_i}_t(x)|.
double delta_mu(const std::vector<std::vector<double>>& empirical, const MeanFieldEnsemble& mf);

struct ConvergenceRow {
  int agents = 0;
  int realization = 0;
  double delta_mu = 0.0;
};

struct ConvergenceSummary {
  int agents = 0;
  double mean = 0.0;
  double standard_error = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

struct ConvergenceOptions {
  std::vector<int> sizes;
  int realizations = 2;
  std::uint64_t seed = 0;
  AlphaMode alpha_mode = AlphaMode::grid;
  int threads = 1;
  /// Called in (size, realization) order with each finished run; the run's
  /// graph pointer is released before the call.
  std::function<void(int realization, const SimulationRun&)> on_run;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceSummary> summary;
};

/// For each N, samples `realizations` hypergraphs and shared-policy games
/// and reports Delta mu against the limiting mean field.
ConvergenceResult delta_mu_experiment(const MfgProblem& problem,
                                      const MultiLayerHypergraphon& hypergraphon,
                                      const PolicyEnsemble& policy, const MeanFieldEnsemble& mf,
                                      const ConvergenceOptions& options);

ConvergenceSummary summarize(int agents, std::span<const double> samples);

}  // namespace hmfg
