#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hmfg {

/// Per layer d, a nonnegative measure on X^(k_d - 1). Tuples are flattened
/// row-major with the first neighbor slot most significant.
struct NeighborhoodMeanField {
  int num_states = 0;
  std::vector<int> cardinalities;
  std::vector<std::vector<double>> layers;

  static NeighborhoodMeanField zeros(int num_states, std::span<const int> cardinalities);

  std::size_t depth() const { return layers.size(); }
  int slots(std::size_t d) const { return cardinalities[d] - 1; }
  double mass(std::size_t d) const;

  /// Flat index of a neighbor-state tuple on layer d.
  std::size_t index(std::size_t d, std::span<const int> states) const;
  /// Neighbor state in `slot` of flat tuple index `flat` on layer d.
  int state_at(std::size_t d, std::size_t flat, int slot) const;

  /// Expected number of neighbor slots (over the layer-d measure) whose
  /// state satisfies `member`; member is indexed by state.
  double expected_count(std::size_t d, std::span<const char> member) const;
};

/// A finite-horizon MFG with neighborhood-mean-field coupling. Decision
/// epochs are 0..horizon-1.
struct MfgProblem {
  using InitialFn = std::function<std::vector<double>(double alpha)>;
  using TransitionFn = std::function<void(int t, int x, int u, const NeighborhoodMeanField&,
                                          std::span<double> next)>;
  using RewardFn = std::function<double(int t, int x, int u, const NeighborhoodMeanField&)>;

  std::vector<std::string> states;
  std::vector<std::string> actions;
  int horizon = 1;
  double gamma = 1.0;
  std::vector<int> layer_cardinalities;
  InitialFn initial_distribution;
  /// Writes P_t(. | x, u, nu) into `next` (size |X|).
  TransitionFn transition;
  RewardFn reward;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
  std::size_t depth() const { return layer_cardinalities.size(); }

  /// Throws std::invalid_argument on structural problems (empty spaces,
  /// horizon < 1, gamma outside (0,1], missing callbacks).
  void validate() const;
};

/// A problem whose transitions and rewards read neighbors' joint
/// state-action pairs: the nu passed to its callbacks is a measure on
/// (X x U)^(k_d - 1) with pair index x * |U| + u.
struct ActionCoupledProblem {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  int horizon = 1;
  double gamma = 1.0;
  std::vector<int> layer_cardinalities;
  MfgProblem::InitialFn initial_distribution;
  MfgProblem::TransitionFn transition;
  MfgProblem::RewardFn reward;
};

/// State space X + (X x U): bare states move deterministically to (x, u)
/// with zero reward; pair states apply the base transition and reward at
/// base epoch t/2, reading neighbors' pair components. Horizon doubles,
/// the discount becomes sqrt(gamma) and rewards are divided by sqrt(gamma)
/// so objectives coincide with the base problem.
MfgProblem extend_state_space(const ActionCoupledProblem& base);

struct RumorParams {
  /// Per-layer values; a single entry is broadcast to every layer.
  std::vector<double> tau{0.3, 0.5};
  std::vector<double> gain{0.5};
  std::vector<double> cost{0.8};
  double initial_aware = 0.01;
  int horizon = 50;
  /// When set, mu0^alpha(A) = aware_level if alpha > threshold, else 0.
  std::optional<double> aware_threshold;
  double aware_level = 1.0;
};

/// Rumor spreading on the extended space
/// {I, A, (I,no_spread), (I,spread), (A,no_spread), (A,spread)} with
/// actions {no_spread, spread}. `horizon` counts extended epochs.
MfgProblem rumor_problem(const RumorParams& params, std::vector<int> layer_cardinalities);

namespace rumor {
inline constexpr int kIgnorant = 0;
inline constexpr int kAware = 1;
inline constexpr int kIgnorantQuiet = 2;
inline constexpr int kIgnorantSpread = 3;
inline constexpr int kAwareQuiet = 4;
inline constexpr int kAwareSpread = 5;
inline constexpr int kNoSpread = 0;
inline constexpr int kSpread = 1;
/// Base state (ignorant or aware) of any extended state.
inline int base_state(int x) { return x < 2 ? x : (x - 2) / 2; }
}  // namespace rumor

struct SisParams {
  std::vector<double> tau{0.8};
  double recovery = 0.2;
  double cost_precaution = 0.5;
  double cost_infection = 2.0;
  double initial_infected = 0.5;
  int horizon = 50;
};

/// SIS epidemic with X = {S, I}, U = {no_precaution, precaution}. Rewards
/// are negated costs.
MfgProblem sis_problem(const SisParams& params, std::vector<int> layer_cardinalities);

namespace sis {
inline constexpr int kSusceptible = 0;
inline constexpr int kInfected = 1;
inline constexpr int kNoPrecaution = 0;
inline constexpr int kPrecaution = 1;
}  // namespace sis

}  // namespace hmfg
