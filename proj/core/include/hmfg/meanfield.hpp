#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hmfg/game.hpp"
#include "hmfg/kernels.hpp"

namespace hmfg {

/// Representative point (i + 0.5)/M of grid interval i (0-based).
inline double grid_point(int i, int resolution) { return (i + 0.5) / resolution; }

/// mu^{alpha_i}_t for grid points i < M and times t = 0..T (inclusive).
class MeanFieldEnsemble {
 public:
  MeanFieldEnsemble() = default;
  MeanFieldEnsemble(int resolution, int horizon, int num_states);

  int resolution() const { return m_; }
  int horizon() const { return t_; }
  int num_states() const { return x_; }

  std::span<double> at(int i, int t) { return {data_.data() + offset(i, t), static_cast<std::size_t>(x_)}; }
  std::span<const double> at(int i, int t) const {
    return {data_.data() + offset(i, t), static_cast<std::size_t>(x_)};
  }
  double& operator()(int i, int t, int x) { return data_[offset(i, t) + static_cast<std::size_t>(x)]; }
  double operator()(int i, int t, int x) const { return data_[offset(i, t) + static_cast<std::size_t>(x)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Grid-average M^{-1} sum_i mu^{alpha_i}_t(x).
  double average(int t, int x) const;

  bool operator==(const MeanFieldEnsemble&) const = default;

 private:
  std::size_t offset(int i, int t) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(t_ + 1) + static_cast<std::size_t>(t)) *
           static_cast<std::size_t>(x_);
  }

  int m_ = 0, t_ = 0, x_ = 0;
  std::vector<double> data_;
};

/// pi^{alpha_i}_t(. | x) for grid points i < M, times t < T, states x.
class PolicyEnsemble {
 public:
  PolicyEnsemble() = default;
  PolicyEnsemble(int resolution, int horizon, int num_states, int num_actions);

  static PolicyEnsemble uniform(int resolution, int horizon, int num_states, int num_actions);

  int resolution() const { return m_; }
  int horizon() const { return t_; }
  int num_states() const { return x_; }
  int num_actions() const { return u_; }

  std::span<double> at(int i, int t, int x) {
    return {data_.data() + offset(i, t, x), static_cast<std::size_t>(u_)};
  }
  std::span<const double> at(int i, int t, int x) const {
    return {data_.data() + offset(i, t, x), static_cast<std::size_t>(u_)};
  }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Index of the largest probability (lowest index on ties).
  int greedy_action(int i, int t, int x) const;

  bool operator==(const PolicyEnsemble&) const = default;

 private:
  std::size_t offset(int i, int t, int x) const {
    return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(t_) + static_cast<std::size_t>(t)) *
                static_cast<std::size_t>(x_) +
            static_cast<std::size_t>(x)) *
           static_cast<std::size_t>(u_);
  }

  int m_ = 0, t_ = 0, x_ = 0, u_ = 0;
  std::vector<double> data_;
};

/// V for t = 0..T (V_T = 0) and Q for t < T, per grid point.
class ValueTable {
 public:
  ValueTable() = default;
  ValueTable(int resolution, int horizon, int num_states, int num_actions);

  int resolution() const { return m_; }
  int horizon() const { return t_; }

  double& v(int i, int t, int x) { return v_[v_index(i, t, x)]; }
  double v(int i, int t, int x) const { return v_[v_index(i, t, x)]; }
  double& q(int i, int t, int x, int u) { return q_[q_index(i, t, x, u)]; }
  double q(int i, int t, int x, int u) const { return q_[q_index(i, t, x, u)]; }

 private:
  std::size_t v_index(int i, int t, int x) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(t_ + 1) + static_cast<std::size_t>(t)) *
               static_cast<std::size_t>(x_) +
           static_cast<std::size_t>(x);
  }
  std::size_t q_index(int i, int t, int x, int u) const {
    return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(t_) + static_cast<std::size_t>(t)) *
                static_cast<std::size_t>(x_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(u_) +
           static_cast<std::size_t>(u);
  }

  int m_ = 0, t_ = 0, x_ = 0, u_ = 0;
  std::vector<double> v_;
  std::vector<double> q_;
};

/// Neighborhood mean fields nu^{alpha_i}_t for every grid point and t < T.
class NeighborhoodTrajectory {
 public:
  NeighborhoodTrajectory() = default;
  NeighborhoodTrajectory(int resolution, int horizon)
      : m_(resolution), t_(horizon), data_(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(horizon)) {}

  int resolution() const { return m_; }
  int horizon() const { return t_; }
  const NeighborhoodMeanField& at(int i, int t) const { return data_[index(i, t)]; }
  NeighborhoodMeanField& at(int i, int t) { return data_[index(i, t)]; }

 private:
  std::size_t index(int i, int t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(i);
  }
  int m_ = 0, t_ = 0;
  std::vector<NeighborhoodMeanField> data_;
};

using LayerGrids = std::vector<VertexKernelGrid>;

/// Discretizes every layer at resolution M.
LayerGrids discretize_all(const MultiLayerHypergraphon& hypergraphon, int resolution,
                          int threads = 1);

/// Riemann-sum neighborhood mean field of grid point i at time t:
/// nu_d(x_1..x_{k-1}) = M^{-(k-1)} sum_j grid_d[i, j...] prod_r mu^{j_r}_t(x_r).
NeighborhoodMeanField neighborhood_mf(const LayerGrids& grids, const MeanFieldEnsemble& mf,
                                      int i, int t);

/// neighborhood_mf for every grid point and every t < T.
NeighborhoodTrajectory neighborhood_trajectory(const LayerGrids& grids,
                                               const MeanFieldEnsemble& mf, int threads = 1);

struct Propagation {
  MeanFieldEnsemble mean_field;
  NeighborhoodTrajectory neighborhoods;
};

/// Psi restricted to the grid: mu_0 = mu0(alpha_i), then
/// mu_{t+1}(x') = sum_x mu_t(x) sum_u pi_t(u|x) P_t(x'|x,u,nu_t).
Propagation forward_propagate(const MfgProblem& problem, const LayerGrids& grids,
                              const PolicyEnsemble& policy, int threads = 1);

struct BestResponse {
  PolicyEnsemble policy;
  ValueTable values;
};

/// Backwards induction under the frozen neighborhoods. The returned policy
/// is deterministic argmax with ties broken toward the lowest action.
BestResponse best_response(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods,
                           int threads = 1);
BestResponse best_response(const MfgProblem& problem, const LayerGrids& grids,
                           const MeanFieldEnsemble& mf, int threads = 1);

/// Policy evaluation: V^pi and Q^pi under the frozen neighborhoods.
ValueTable evaluate_policy(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods,
                           const PolicyEnsemble& policy, int threads = 1);

/// Per grid point, sum_x mu0^{alpha_i}(x) V_0(i, x).
std::vector<double> initial_values(const MfgProblem& problem, const ValueTable& values);

struct Exploitability {
  double value = 0.0;
  std::vector<double> per_grid_point;
};

/// Delta J of a policy whose neighborhoods (of Psi(policy)) are known.
Exploitability exploitability(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods,
                              const PolicyEnsemble& policy, int threads = 1);
/// Delta J(pi) = M^{-1} sum_i [sup J^{Psi(pi)}_i - J^{Psi(pi)}_i(pi)].
double exploitability(const MfgProblem& problem, const LayerGrids& grids,
                      const PolicyEnsemble& policy, int threads = 1);

/// sum_x sum_t |M^{-1} sum_i a^i_t(x) - M^{-1} sum_i b^i_t(x)|.
double mf_distance(const MeanFieldEnsemble& a, const MeanFieldEnsemble& b);

struct IterationDiagnostics {
  int iteration = 0;
  double exploitability = 0.0;
  double mf_distance_to_previous = 0.0;
  bool policy_changed = false;
};

struct FixedPointOptions {
  int iterations = 200;
  double damping = 0.0;
  /// Stop once the iterate's exploitability is at or below this.
  double tolerance = 1e-10;
  int threads = 1;
};

struct SolverResult {
  PolicyEnsemble policy;
  MeanFieldEnsemble mean_field;
  std::vector<IterationDiagnostics> diagnostics;
  bool converged = false;
};

/// Alternates pi <- best_response(mu), mu <- (1-damping) Psi(pi) + damping mu.
/// Diagnostics row n reports the exploitability of the n-th best response
/// and the distance between consecutive mean fields.
SolverResult fixed_point_iteration(const MfgProblem& problem, const LayerGrids& grids,
                                   const PolicyEnsemble& initial_policy,
                                   const FixedPointOptions& options = {});

struct MirrorDescentOptions {
  int iterations = 2000;
  double learning_rate = 1.0;
  double temperature = 1.0;
  int threads = 1;
};

/// Online mirror descent: y += eta * Q^pi under Psi(pi), pi = softmax(y / temperature).
/// Diagnostics rows 0..iterations; row n is the policy after n updates
/// (row 0 is the uniform initial policy).
SolverResult omd_iteration(const MfgProblem& problem, const LayerGrids& grids,
                           const MirrorDescentOptions& options = {});

}  // namespace hmfg
