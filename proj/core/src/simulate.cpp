#include "hmfg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hmfg/parallel.hpp"
#include "hmfg/random.hpp"

namespace hmfg {

AgentPolicy::AgentPolicy(int horizon, int num_states, int num_actions)
    : t_(horizon), x_(num_states), u_(num_actions) {
  if (horizon < 1 || num_states < 1 || num_actions < 1)
    throw std::invalid_argument("invalid agent policy shape");
  data_.assign(static_cast<std::size_t>(t_) * static_cast<std::size_t>(x_) * static_cast<std::size_t>(u_), 0.0);
}

AgentPolicy AgentPolicy::from_ensemble(const PolicyEnsemble& policy, int grid_index) {
  AgentPolicy out(policy.horizon(), policy.num_states(), policy.num_actions());
  for (int t = 0; t < out.t_; ++t)
    for (int x = 0; x < out.x_; ++x) {
      auto src = policy.at(grid_index, t, x);
      std::copy(src.begin(), src.end(), out.at(t, x).begin());
    }
  return out;
}

AgentPolicy AgentPolicy::constant(int horizon, int num_states, int num_actions, int action) {
  if (action < 0 || action >= num_actions) throw std::out_of_range("action out of range");
  AgentPolicy out(horizon, num_states, num_actions);
  for (int t = 0; t < horizon; ++t)
    for (int x = 0; x < num_states; ++x) out.at(t, x)[action] = 1.0;
  return out;
}

int shared_grid_index(int agent, int agents, int resolution) {
  if (agents < 1 || resolution < 1) throw std::invalid_argument("agents and resolution must be >= 1");
  if (agent < 0 || agent >= agents) throw std::out_of_range("agent out of range");
  const long long num = static_cast<long long>(agent + 1) * resolution;
  return static_cast<int>((num + agents - 1) / agents) - 1;
}

std::vector<AgentPolicy> share_policy(const PolicyEnsemble& policy, int agents) {
  std::vector<AgentPolicy> out;
  out.reserve(static_cast<std::size_t>(agents));
  for (int i = 0; i < agents; ++i)
    out.push_back(AgentPolicy::from_ensemble(policy, shared_grid_index(i, agents, policy.resolution())));
  return out;
}

// ---------------------------------------------------------------------------
// Empirical neighborhoods

namespace {

const std::vector<std::vector<int>>& slot_permutations(int slots) {
  static const std::vector<std::vector<std::vector<int>>> table = [] {
    std::vector<std::vector<std::vector<int>>> t(9);
    for (int n = 0; n < 9; ++n) {
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      do {
        t[n].push_back(perm);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return t;
  }();
  if (slots < 0 || slots >= static_cast<int>(table.size()))
    throw std::invalid_argument("unsupported layer cardinality for simulation");
  return table[static_cast<std::size_t>(slots)];
}

}  // namespace

NeighborhoodMeanField empirical_neighborhood_mf(const MultiLayerHypergraph& graph,
                                                const Incidence& incidence,
                                                std::span<const int> states, int num_states,
                                                int agent) {
  const auto cards = graph.cardinalities();
  auto nu = NeighborhoodMeanField::zeros(num_states, cards);
  const double n = graph.vertex_count();
  const auto base = static_cast<std::size_t>(num_states);
  std::vector<int> others;
  for (std::size_t d = 0; d < graph.depth(); ++d) {
    const auto& layer = graph.layer(d);
    const int slots = layer.cardinality() - 1;
    const double weight = std::pow(n, -slots);
    const auto& perms = slot_permutations(slots);
    auto& measure = nu.layers[d];
    for (std::uint32_t e : incidence.edges(d, agent)) {
      others.clear();
      for (int v : layer.edge(e))
        if (v != agent) others.push_back(states[static_cast<std::size_t>(v)]);
      for (const auto& perm : perms) {
        std::size_t flat = 0;
        for (int s = 0; s < slots; ++s) flat = flat * base + static_cast<std::size_t>(others[perm[s]]);
        measure[flat] += weight;
      }
    }
  }
  return nu;
}

NeighborhoodMeanField empirical_neighborhood_mf(const SimulationRun& run, int agent, int t) {
  if (!run.graph) throw std::invalid_argument("simulation run has no hypergraph attached");
  if (agent < 0 || agent >= run.agents) throw std::out_of_range("agent out of range");
  if (t < 0 || t > run.horizon) throw std::out_of_range("time out of range");
  std::vector<int> states(static_cast<std::size_t>(run.agents));
  for (int i = 0; i < run.agents; ++i) states[i] = run.state(i, t);
  return empirical_neighborhood_mf(*run.graph, Incidence(*run.graph), states, run.num_states, agent);
}

// ---------------------------------------------------------------------------
// Simulation

SimulationRun simulate_game(const MfgProblem& problem,
                            std::shared_ptr<const MultiLayerHypergraph> graph,
                            const std::vector<AgentPolicy>& policies,
                            const std::optional<Deviation>& deviation, std::uint64_t seed) {
  problem.validate();
  if (!graph) throw std::invalid_argument("simulate_game needs a hypergraph");
  const int agents = graph->vertex_count();
  if (policies.size() != static_cast<std::size_t>(agents))
    throw std::invalid_argument("need one policy per agent: " + std::to_string(policies.size()) +
                                " policies for " + std::to_string(agents) + " agents");
  if (graph->cardinalities() != problem.layer_cardinalities)
    throw std::invalid_argument("hypergraph layers do not match the problem's layer cardinalities");
  if (deviation && (deviation->agent < 0 || deviation->agent >= agents))
    throw std::out_of_range("deviating agent out of range");

  const int horizon = problem.horizon;
  const int nx = problem.num_states();
  auto policy_of = [&](int i) -> const AgentPolicy& {
    return deviation && deviation->agent == i ? deviation->policy : policies[static_cast<std::size_t>(i)];
  };
  for (int i = 0; i < agents; ++i) {
    const auto& p = policy_of(i);
    if (p.horizon() != horizon || p.num_states() != nx || p.num_actions() != problem.num_actions())
      throw std::invalid_argument("agent policy shape does not match the problem");
  }

  SimulationRun run;
  run.graph = graph;
  run.agents = agents;
  run.horizon = horizon;
  run.num_states = nx;
  run.seed = seed;
  run.states.assign(static_cast<std::size_t>(agents) * static_cast<std::size_t>(horizon + 1), 0);
  run.actions.assign(static_cast<std::size_t>(agents) * static_cast<std::size_t>(horizon), 0);
  auto state_ref = [&](int i, int t) -> int& {
    return run.states[static_cast<std::size_t>(i) * static_cast<std::size_t>(horizon + 1) + static_cast<std::size_t>(t)];
  };
  auto action_ref = [&](int i, int t) -> int& {
    return run.actions[static_cast<std::size_t>(i) * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(t)];
  };

  Engine engine(seed);
  for (int i = 0; i < agents; ++i) {
    const auto mu0 = problem.initial_distribution(agent_alpha(i, agents));
    state_ref(i, 0) = sample_index(mu0, uniform01(engine));
  }

  const Incidence incidence(*graph);
  std::vector<int> current(static_cast<std::size_t>(agents));
  std::vector<double> p(static_cast<std::size_t>(nx));
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < agents; ++i) current[i] = state_ref(i, t);
    for (int i = 0; i < agents; ++i)
      action_ref(i, t) = sample_index(policy_of(i).at(t, current[i]), uniform01(engine));
    for (int i = 0; i < agents; ++i) {
      const auto nu = empirical_neighborhood_mf(*graph, incidence, current, nx, i);
      problem.transition(t, current[i], action_ref(i, t), nu, p);
      state_ref(i, t + 1) = sample_index(p, uniform01(engine));
    }
  }
  return run;
}

std::vector<std::vector<double>> empirical_distribution(const SimulationRun& run) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(run.horizon + 1),
                                       std::vector<double>(static_cast<std::size_t>(run.num_states), 0.0));
  for (int t = 0; t <= run.horizon; ++t) {
    for (int i = 0; i < run.agents; ++i) out[t][run.state(i, t)] += 1.0;
    for (double& v : out[t]) v /= run.agents;
  }
  return out;
}

double delta_mu(const std::vector<std::vector<double>>& empirical, const MeanFieldEnsemble& mf) {
  if (empirical.size() < static_cast<std::size_t>(mf.horizon()))
    throw std::invalid_argument("empirical distribution is shorter than the horizon");
  double total = 0.0;
  for (int t = 0; t < mf.horizon(); ++t) {
    if (empirical[t].size() != static_cast<std::size_t>(mf.num_states()))
      throw std::invalid_argument("empirical distribution has wrong state count");
    for (int x = 0; x < mf.num_states(); ++x) total += std::abs(empirical[t][x] - mf.average(t, x));
  }
  return total;
}

ConvergenceSummary summarize(int agents, std::span<const double> samples) {
  ConvergenceSummary s;
  s.agents = agents;
  const double n = static_cast<double>(samples.size());
  if (samples.empty()) return s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  s.ci95_low = s.mean - 1.96 * s.standard_error;
  s.ci95_high = s.mean + 1.96 * s.standard_error;
  return s;
}

ConvergenceResult delta_mu_experiment(const MfgProblem& problem,
                                      const MultiLayerHypergraphon& hypergraphon,
                                      const PolicyEnsemble& policy, const MeanFieldEnsemble& mf,
                                      const ConvergenceOptions& options) {
  if (options.realizations < 2) throw std::invalid_argument("realizations must be >= 2");
  if (options.sizes.empty()) throw std::invalid_argument("no agent counts given");
  if (mf.horizon() != problem.horizon || mf.num_states() != problem.num_states())
    throw std::invalid_argument("mean field shape does not match the problem");

  ConvergenceResult result;
  for (int agents : options.sizes) {
    const auto policies = share_policy(policy, agents);
    std::vector<double> values(static_cast<std::size_t>(options.realizations));
    std::vector<SimulationRun> runs(options.on_run ? values.size() : 0);
    parallel_for(values.size(), options.threads, [&](std::size_t r) {
      const auto id = static_cast<std::uint64_t>(agents);
      auto graph = std::make_shared<const MultiLayerHypergraph>(
          sample(hypergraphon, agents, derive_seed(options.seed, {id, r, 0}), options.alpha_mode));
      auto run = simulate_game(problem, graph, policies, std::nullopt, derive_seed(options.seed, {id, r, 1}));
      values[r] = delta_mu(empirical_distribution(run), mf);
      if (options.on_run) {
        run.graph.reset();
        runs[r] = std::move(run);
      }
    });
    for (std::size_t r = 0; r < values.size(); ++r) {
      result.rows.push_back({agents, static_cast<int>(r), values[r]});
      if (options.on_run) options.on_run(static_cast<int>(r), runs[r]);
    }
    result.summary.push_back(summarize(agents, values));
  }
  return result;
}

}  // namespace hmfg
