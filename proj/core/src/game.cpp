#include "hmfg/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hmfg {

namespace {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

std::vector<double> per_layer(const std::vector<double>& values, std::size_t depth,
                              const char* name) {
  if (values.size() == 1) return std::vector<double>(depth, values[0]);
  if (values.size() != depth)
    throw std::invalid_argument(std::string(name) + " needs one entry per layer (" +
                                std::to_string(depth) + ") or a single value");
  return values;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void check_cards(const std::vector<int>& cards) {
  require(!cards.empty(), "problem needs at least one layer");
  for (int k : cards) require(k >= 2, "layer cardinalities must be >= 2");
}

}  // namespace

// ---------------------------------------------------------------------------
// NeighborhoodMeanField

NeighborhoodMeanField NeighborhoodMeanField::zeros(int num_states,
                                                   std::span<const int> cardinalities) {
  NeighborhoodMeanField nu;
  nu.num_states = num_states;
  nu.cardinalities.assign(cardinalities.begin(), cardinalities.end());
  for (int k : cardinalities)
    nu.layers.emplace_back(ipow(static_cast<std::size_t>(num_states), k - 1), 0.0);
  return nu;
}

double NeighborhoodMeanField::mass(std::size_t d) const {
  return std::accumulate(layers[d].begin(), layers[d].end(), 0.0);
}

std::size_t NeighborhoodMeanField::index(std::size_t d, std::span<const int> states) const {
  if (states.size() != static_cast<std::size_t>(slots(d)))
    throw std::invalid_argument("neighbor tuple has wrong length");
  std::size_t flat = 0;
  for (int x : states) flat = flat * static_cast<std::size_t>(num_states) + static_cast<std::size_t>(x);
  return flat;
}

int NeighborhoodMeanField::state_at(std::size_t d, std::size_t flat, int slot) const {
  const int n = slots(d);
  for (int s = n - 1; s > slot; --s) flat /= static_cast<std::size_t>(num_states);
  return static_cast<int>(flat % static_cast<std::size_t>(num_states));
}

double NeighborhoodMeanField::expected_count(std::size_t d, std::span<const char> member) const {
  const auto& measure = layers[d];
  const int n = slots(d);
  const auto base = static_cast<std::size_t>(num_states);
  double total = 0.0;
  for (std::size_t flat = 0; flat < measure.size(); ++flat) {
    if (measure[flat] == 0.0) continue;
    int count = 0;
    std::size_t rest = flat;
    for (int s = 0; s < n; ++s) {
      count += member[rest % base] ? 1 : 0;
      rest /= base;
    }
    total += measure[flat] * count;
  }
  return total;
}

// ---------------------------------------------------------------------------
// MfgProblem

void MfgProblem::validate() const {
  require(!states.empty(), "problem has no states");
  require(!actions.empty(), "problem has no actions");
  require(horizon >= 1, "horizon must be >= 1");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0,1]");
  check_cards(layer_cardinalities);
  require(static_cast<bool>(initial_distribution) && static_cast<bool>(transition) &&
              static_cast<bool>(reward),
          "problem callbacks are not all set");
}

// ---------------------------------------------------------------------------
// Extended state space

MfgProblem extend_state_space(const ActionCoupledProblem& base) {
  const int nx = static_cast<int>(base.states.size());
  const int nu = static_cast<int>(base.actions.size());
  require(nx >= 1 && nu >= 1, "base problem needs states and actions");
  require(base.horizon >= 1, "base horizon must be >= 1");
  require(base.gamma > 0.0 && base.gamma <= 1.0, "base gamma must lie in (0,1]");
  check_cards(base.layer_cardinalities);

  MfgProblem ext;
  ext.states = base.states;
  for (const auto& x : base.states)
    for (const auto& u : base.actions) ext.states.push_back("(" + x + "," + u + ")");
  ext.actions = base.actions;
  ext.horizon = 2 * base.horizon;
  ext.gamma = std::sqrt(base.gamma);
  ext.layer_cardinalities = base.layer_cardinalities;

  const int n_ext = nx + nx * nu;
  const double reward_scale = 1.0 / ext.gamma;
  auto cards = base.layer_cardinalities;

  // Restricts nu over extended tuples to tuples of pair states.
  auto project = [nx, nu, n_ext, cards](const NeighborhoodMeanField& nu_ext) {
    auto pairs = NeighborhoodMeanField::zeros(nx * nu, cards);
    for (std::size_t d = 0; d < cards.size(); ++d) {
      const int slots = cards[d] - 1;
      const auto& src = nu_ext.layers[d];
      for (std::size_t flat = 0; flat < src.size(); ++flat) {
        if (src[flat] == 0.0) continue;
        std::size_t rest = flat, target = 0, weight = 1;
        bool all_pairs = true;
        for (int s = 0; s < slots; ++s) {
          const int x = static_cast<int>(rest % static_cast<std::size_t>(n_ext));
          rest /= static_cast<std::size_t>(n_ext);
          if (x < nx) {
            all_pairs = false;
            break;
          }
          target += static_cast<std::size_t>(x - nx) * weight;
          weight *= static_cast<std::size_t>(nx * nu);
        }
        if (all_pairs) pairs.layers[d][target] += src[flat];
      }
    }
    return pairs;
  };

  auto initial = base.initial_distribution;
  ext.initial_distribution = [initial, n_ext, nx](double alpha) {
    auto mu = initial(alpha);
    if (mu.size() != static_cast<std::size_t>(nx))
      throw std::invalid_argument("base initial distribution has wrong size");
    mu.resize(static_cast<std::size_t>(n_ext), 0.0);
    return mu;
  };

  auto transition = base.transition;
  ext.transition = [transition, project, nx, nu](int t, int x, int u,
                                                 const NeighborhoodMeanField& nu_ext,
                                                 std::span<double> next) {
    std::fill(next.begin(), next.end(), 0.0);
    if (x < nx) {
      next[static_cast<std::size_t>(nx + x * nu + u)] = 1.0;
      return;
    }
    const int bx = (x - nx) / nu, bu = (x - nx) % nu;
    transition(t / 2, bx, bu, project(nu_ext), next.first(static_cast<std::size_t>(nx)));
  };

  auto reward = base.reward;
  ext.reward = [reward, project, nx, nu, reward_scale](int t, int x, int,
                                                       const NeighborhoodMeanField& nu_ext) {
    if (x < nx) return 0.0;
    const int bx = (x - nx) / nu, bu = (x - nx) % nu;
    return reward(t / 2, bx, bu, project(nu_ext)) * reward_scale;
  };
  return ext;
}

// ---------------------------------------------------------------------------
// Rumor

MfgProblem rumor_problem(const RumorParams& params, std::vector<int> layer_cardinalities) {
  check_cards(layer_cardinalities);
  const std::size_t depth = layer_cardinalities.size();
  const auto tau = per_layer(params.tau, depth, "tau");
  const auto gain = per_layer(params.gain, depth, "gain");
  const auto cost = per_layer(params.cost, depth, "cost");
  for (std::size_t d = 0; d < depth; ++d) {
    require(tau[d] >= 0.0, "tau must be nonnegative");
    require(gain[d] >= 0.0, "gain must be nonnegative");
    require(cost[d] >= 0.0, "cost must be nonnegative");
  }
  require(params.initial_aware >= 0.0 && params.initial_aware <= 1.0,
          "initial_aware must lie in [0,1]");
  require(params.horizon >= 1, "horizon must be >= 1");
  if (params.aware_threshold)
    require(*params.aware_threshold >= 0.0 && *params.aware_threshold <= 1.0,
            "aware_threshold must lie in [0,1]");
  require(params.aware_level >= 0.0 && params.aware_level <= 1.0, "aware_level must lie in [0,1]");

  using namespace rumor;
  MfgProblem p;
  p.states = {"I", "A", "(I,no_spread)", "(I,spread)", "(A,no_spread)", "(A,spread)"};
  p.actions = {"no_spread", "spread"};
  p.horizon = params.horizon;
  p.gamma = 1.0;
  p.layer_cardinalities = std::move(layer_cardinalities);

  const double init = params.initial_aware;
  const auto threshold = params.aware_threshold;
  const double level = params.aware_level;
  p.initial_distribution = [init, threshold, level](double alpha) {
    const double aware = threshold ? (alpha > *threshold ? level : 0.0) : init;
    return std::vector<double>{1.0 - aware, aware, 0.0, 0.0, 0.0, 0.0};
  };

  static constexpr char kSpreaders[6] = {0, 0, 0, 0, 0, 1};
  static constexpr char kBaseIgnorant[6] = {1, 0, 1, 1, 0, 0};
  static constexpr char kBaseAware[6] = {0, 1, 0, 0, 1, 1};

  p.transition = [tau](int, int x, int u, const NeighborhoodMeanField& nu,
                       std::span<double> next) {
    std::fill(next.begin(), next.end(), 0.0);
    if (x == kIgnorant || x == kAware) {
      next[static_cast<std::size_t>(2 + 2 * x + u)] = 1.0;
      return;
    }
    if (base_state(x) == kAware) {
      next[kAware] = 1.0;
      return;
    }
    double rate = 0.0;
    for (std::size_t d = 0; d < nu.depth(); ++d) rate += tau[d] * nu.expected_count(d, kSpreaders);
    const double infect = std::min(1.0, rate);
    next[kAware] = infect;
    next[kIgnorant] = 1.0 - infect;
  };

  p.reward = [gain, cost](int, int x, int, const NeighborhoodMeanField& nu) {
    if (x != kAwareSpread) return 0.0;
    double r = 0.0;
    for (std::size_t d = 0; d < nu.depth(); ++d)
      r += gain[d] * nu.expected_count(d, kBaseIgnorant) -
           cost[d] * nu.expected_count(d, kBaseAware);
    return r;
  };
  return p;
}

// ---------------------------------------------------------------------------
// SIS

MfgProblem sis_problem(const SisParams& params, std::vector<int> layer_cardinalities) {
  check_cards(layer_cardinalities);
  const auto tau = per_layer(params.tau, layer_cardinalities.size(), "tau");
  for (double t : tau) require(t >= 0.0, "tau must be nonnegative");
  require(params.recovery >= 0.0 && params.recovery <= 1.0, "recovery must lie in [0,1]");
  require(params.cost_precaution >= 0.0, "cost_precaution must be nonnegative");
  require(params.cost_infection >= 0.0, "cost_infection must be nonnegative");
  require(params.initial_infected >= 0.0 && params.initial_infected <= 1.0,
          "initial_infected must lie in [0,1]");
  require(params.horizon >= 1, "horizon must be >= 1");

  using namespace sis;
  MfgProblem p;
  p.states = {"S", "I"};
  p.actions = {"no_precaution", "precaution"};
  p.horizon = params.horizon;
  p.gamma = 1.0;
  p.layer_cardinalities = std::move(layer_cardinalities);

  const double init = params.initial_infected;
  p.initial_distribution = [init](double) { return std::vector<double>{1.0 - init, init}; };

  static constexpr char kInfectedSlot[2] = {0, 1};
  const double delta = params.recovery;
  p.transition = [tau, delta](int, int x, int u, const NeighborhoodMeanField& nu,
                              std::span<double> next) {
    if (x == kInfected) {
      next[kSusceptible] = delta;
      next[kInfected] = 1.0 - delta;
      return;
    }
    double infect = 0.0;
    if (u == kNoPrecaution) {
      double rate = 0.0;
      for (std::size_t d = 0; d < nu.depth(); ++d)
        rate += tau[d] * nu.expected_count(d, kInfectedSlot);
      infect = std::min(1.0, rate);
    }
    next[kInfected] = infect;
    next[kSusceptible] = 1.0 - infect;
  };

  const double cp = params.cost_precaution, ci = params.cost_infection;
  p.reward = [cp, ci](int, int x, int u, const NeighborhoodMeanField&) {
    return -(cp * (u == kPrecaution ? 1.0 : 0.0) + ci * (x == kInfected ? 1.0 : 0.0));
  };
  return p;
}

}  // namespace hmfg
