#include "hmfg/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hmfg/parallel.hpp"

namespace hmfg {

// ---------------------------------------------------------------------------
// Containers

MeanFieldEnsemble::MeanFieldEnsemble(int resolution, int horizon, int num_states)
    : m_(resolution), t_(horizon), x_(num_states) {
  if (resolution < 1 || horizon < 0 || num_states < 1)
    throw std::invalid_argument("invalid mean field ensemble shape");
  data_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(t_ + 1) * static_cast<std::size_t>(x_),
               0.0);
}

double MeanFieldEnsemble::average(int t, int x) const {
  double sum = 0.0;
  for (int i = 0; i < m_; ++i) sum += (*this)(i, t, x);
  return sum / m_;
}

PolicyEnsemble::PolicyEnsemble(int resolution, int horizon, int num_states, int num_actions)
    : m_(resolution), t_(horizon), x_(num_states), u_(num_actions) {
  if (resolution < 1 || horizon < 1 || num_states < 1 || num_actions < 1)
    throw std::invalid_argument("invalid policy ensemble shape");
  data_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(t_) * static_cast<std::size_t>(x_) *
                   static_cast<std::size_t>(u_),
               0.0);
}

PolicyEnsemble PolicyEnsemble::uniform(int resolution, int horizon, int num_states, int num_actions) {
  PolicyEnsemble p(resolution, horizon, num_states, num_actions);
  std::fill(p.data_.begin(), p.data_.end(), 1.0 / num_actions);
  return p;
}

int PolicyEnsemble::greedy_action(int i, int t, int x) const {
  auto probs = at(i, t, x);
  int best = 0;
  for (int u = 1; u < u_; ++u)
    if (probs[u] > probs[best]) best = u;
  return best;
}

ValueTable::ValueTable(int resolution, int horizon, int num_states, int num_actions)
    : m_(resolution), t_(horizon), x_(num_states), u_(num_actions) {
  v_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(t_ + 1) * static_cast<std::size_t>(x_), 0.0);
  q_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(t_) * static_cast<std::size_t>(x_) *
                static_cast<std::size_t>(u_),
            0.0);
}

// ---------------------------------------------------------------------------
// Neighborhood mean fields

LayerGrids discretize_all(const MultiLayerHypergraphon& hypergraphon, int resolution, int threads) {
  LayerGrids grids;
  for (const auto& layer : hypergraphon.layers()) grids.push_back(discretize(layer, resolution, threads));
  return grids;
}

namespace {

void check_grids(const LayerGrids& grids, int resolution) {
  if (grids.empty()) throw std::invalid_argument("no layer grids");
  for (const auto& g : grids)
    if (g.resolution() != resolution)
      throw std::invalid_argument("grid resolution " + std::to_string(g.resolution()) +
                                  " does not match mean field resolution " +
                                  std::to_string(resolution));
}

void check_problem_grids(const MfgProblem& problem, const LayerGrids& grids) {
  if (grids.size() != problem.depth())
    throw std::invalid_argument("problem has " + std::to_string(problem.depth()) +
                                " layers but " + std::to_string(grids.size()) + " grids were given");
  for (std::size_t d = 0; d < grids.size(); ++d)
    if (grids[d].cardinality() != problem.layer_cardinalities[d])
      throw std::invalid_argument("layer " + std::to_string(d) + " cardinality mismatch");
}

// Contracts the trailing grid coordinates of one layer slice against the
// mean field at time t, one coordinate at a time.
std::vector<double> contract_layer(const VertexKernelGrid& grid, const MeanFieldEnsemble& mf,
                                   int i, int t) {
  const std::size_t m = static_cast<std::size_t>(grid.resolution());
  const std::size_t nx = static_cast<std::size_t>(mf.num_states());
  const int slots = grid.cardinality() - 1;

  std::size_t outer = 1;
  for (int s = 0; s < slots; ++s) outer *= m;
  const auto values = grid.values();
  std::vector<double> cur(values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * outer),
                          values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i + 1) * outer));
  std::size_t inner = 1;
  for (int s = 0; s < slots; ++s) {
    const std::size_t prefix = outer / m;
    std::vector<double> next(prefix * nx * inner, 0.0);
    for (std::size_t p = 0; p < prefix; ++p)
      for (std::size_t j = 0; j < m; ++j) {
        const double* src = cur.data() + (p * m + j) * inner;
        const auto mu = mf.at(static_cast<int>(j), t);
        for (std::size_t x = 0; x < nx; ++x) {
          const double w = mu[x];
          if (w == 0.0) continue;
          double* dst = next.data() + (p * nx + x) * inner;
          for (std::size_t q = 0; q < inner; ++q) dst[q] += src[q] * w;
        }
      }
    cur = std::move(next);
    outer = prefix;
    inner *= nx;
  }
  const double scale = std::pow(static_cast<double>(m), -slots);
  for (double& v : cur) v *= scale;
  return cur;
}

}  // namespace

NeighborhoodMeanField neighborhood_mf(const LayerGrids& grids, const MeanFieldEnsemble& mf, int i,
                                      int t) {
  check_grids(grids, mf.resolution());
  if (i < 0 || i >= mf.resolution()) throw std::out_of_range("grid point out of range");
  if (t < 0 || t > mf.horizon()) throw std::out_of_range("time out of range");
  NeighborhoodMeanField nu;
  nu.num_states = mf.num_states();
  for (const auto& g : grids) {
    nu.cardinalities.push_back(g.cardinality());
    nu.layers.push_back(contract_layer(g, mf, i, t));
  }
  return nu;
}

NeighborhoodTrajectory neighborhood_trajectory(const LayerGrids& grids, const MeanFieldEnsemble& mf,
                                               int threads) {
  check_grids(grids, mf.resolution());
  NeighborhoodTrajectory out(mf.resolution(), mf.horizon());
  const std::size_t m = static_cast<std::size_t>(mf.resolution());
  parallel_for(m * static_cast<std::size_t>(mf.horizon()), threads, [&](std::size_t n) {
    const int t = static_cast<int>(n / m), i = static_cast<int>(n % m);
    out.at(i, t) = neighborhood_mf(grids, mf, i, t);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Forward propagation

Propagation forward_propagate(const MfgProblem& problem, const LayerGrids& grids,
                              const PolicyEnsemble& policy, int threads) {
  problem.validate();
  check_problem_grids(problem, grids);
  const int m = policy.resolution();
  const int horizon = problem.horizon;
  const int nx = problem.num_states();
  const int nu_count = problem.num_actions();
  check_grids(grids, m);
  if (policy.horizon() != horizon || policy.num_states() != nx || policy.num_actions() != nu_count)
    throw std::invalid_argument("policy shape does not match the problem");

  Propagation out{MeanFieldEnsemble(m, horizon, nx), NeighborhoodTrajectory(m, horizon)};
  auto& mf = out.mean_field;
  for (int i = 0; i < m; ++i) {
    const auto mu0 = problem.initial_distribution(grid_point(i, m));
    if (mu0.size() != static_cast<std::size_t>(nx))
      throw std::invalid_argument("initial distribution has wrong size");
    std::copy(mu0.begin(), mu0.end(), mf.at(i, 0).begin());
  }

  for (int t = 0; t < horizon; ++t) {
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t ii) {
      const int i = static_cast<int>(ii);
      out.neighborhoods.at(i, t) = neighborhood_mf(grids, mf, i, t);
    });
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t ii) {
      const int i = static_cast<int>(ii);
      const auto& nu = out.neighborhoods.at(i, t);
      const auto cur = mf.at(i, t);
      auto next = mf.at(i, t + 1);
      std::vector<double> p(static_cast<std::size_t>(nx));
      for (int x = 0; x < nx; ++x) {
        if (cur[x] == 0.0) continue;
        const auto pi = policy.at(i, t, x);
        for (int u = 0; u < nu_count; ++u) {
          if (pi[u] == 0.0) continue;
          problem.transition(t, x, u, nu, p);
          const double w = cur[x] * pi[u];
          for (int y = 0; y < nx; ++y) next[y] += w * p[y];
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backwards induction

namespace {

template <typename Choose>
void backwards_induction(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods,
                         ValueTable& values, int threads, Choose&& choose) {
  const int m = neighborhoods.resolution();
  const int horizon = problem.horizon;
  const int nx = problem.num_states();
  const int nu_count = problem.num_actions();
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    std::vector<double> p(static_cast<std::size_t>(nx));
    for (int t = horizon - 1; t >= 0; --t) {
      const auto& nu = neighborhoods.at(i, t);
      for (int x = 0; x < nx; ++x) {
        for (int u = 0; u < nu_count; ++u) {
          problem.transition(t, x, u, nu, p);
          double future = 0.0;
          for (int y = 0; y < nx; ++y) future += p[y] * values.v(i, t + 1, y);
          values.q(i, t, x, u) = problem.reward(t, x, u, nu) + problem.gamma * future;
        }
        values.v(i, t, x) = choose(i, t, x);
      }
    }
  });
}

void check_trajectory(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods) {
  problem.validate();
  if (neighborhoods.horizon() != problem.horizon)
    throw std::invalid_argument("neighborhood horizon does not match the problem");
}

}  // namespace

BestResponse best_response(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods,
                           int threads) {
  check_trajectory(problem, neighborhoods);
  const int m = neighborhoods.resolution();
  const int nu_count = problem.num_actions();
  BestResponse out{PolicyEnsemble(m, problem.horizon, problem.num_states(), nu_count),
                   ValueTable(m, problem.horizon, problem.num_states(), nu_count)};
  backwards_induction(problem, neighborhoods, out.values, threads, [&](int i, int t, int x) {
    int best = 0;
    double best_q = out.values.q(i, t, x, 0);
    for (int u = 1; u < nu_count; ++u) {
      const double q = out.values.q(i, t, x, u);
      if (q > best_q) {
        best_q = q;
        best = u;
      }
    }
    out.policy.at(i, t, x)[best] = 1.0;
    return best_q;
  });
  return out;
}

BestResponse best_response(const MfgProblem& problem, const LayerGrids& grids,
                           const MeanFieldEnsemble& mf, int threads) {
  check_problem_grids(problem, grids);
  if (mf.horizon() != problem.horizon || mf.num_states() != problem.num_states())
    throw std::invalid_argument("mean field shape does not match the problem");
  return best_response(problem, neighborhood_trajectory(grids, mf, threads), threads);
}

ValueTable evaluate_policy(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods,
                           const PolicyEnsemble& policy, int threads) {
  check_trajectory(problem, neighborhoods);
  const int nu_count = problem.num_actions();
  if (policy.resolution() != neighborhoods.resolution() || policy.horizon() != problem.horizon ||
      policy.num_states() != problem.num_states() || policy.num_actions() != nu_count)
    throw std::invalid_argument("policy shape does not match the problem");
  ValueTable values(neighborhoods.resolution(), problem.horizon, problem.num_states(), nu_count);
  backwards_induction(problem, neighborhoods, values, threads, [&](int i, int t, int x) {
    const auto pi = policy.at(i, t, x);
    double v = 0.0;
    for (int u = 0; u < nu_count; ++u)
      if (pi[u] != 0.0) v += pi[u] * values.q(i, t, x, u);
    return v;
  });
  return values;
}

std::vector<double> initial_values(const MfgProblem& problem, const ValueTable& values) {
  const int m = values.resolution();
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const auto mu0 = problem.initial_distribution(grid_point(i, m));
    for (int x = 0; x < problem.num_states(); ++x)
      if (mu0[x] != 0.0) out[i] += mu0[x] * values.v(i, 0, x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exploitability and distances

namespace {

Exploitability gap(const MfgProblem& problem, const ValueTable& optimal, const ValueTable& current) {
  const auto best = initial_values(problem, optimal);
  const auto mine = initial_values(problem, current);
  Exploitability out;
  out.per_grid_point.resize(best.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < best.size(); ++i) {
    out.per_grid_point[i] = best[i] - mine[i];
    sum += out.per_grid_point[i];
  }
  out.value = sum / static_cast<double>(best.size());
  return out;
}

}  // namespace

Exploitability exploitability(const MfgProblem& problem, const NeighborhoodTrajectory& neighborhoods,
                              const PolicyEnsemble& policy, int threads) {
  const auto br = best_response(problem, neighborhoods, threads);
  const auto current = evaluate_policy(problem, neighborhoods, policy, threads);
  return gap(problem, br.values, current);
}

double exploitability(const MfgProblem& problem, const LayerGrids& grids, const PolicyEnsemble& policy,
                      int threads) {
  const auto prop = forward_propagate(problem, grids, policy, threads);
  return exploitability(problem, prop.neighborhoods, policy, threads).value;
}

double mf_distance(const MeanFieldEnsemble& a, const MeanFieldEnsemble& b) {
  if (a.resolution() != b.resolution() || a.horizon() != b.horizon() || a.num_states() != b.num_states())
    throw std::invalid_argument("mean field shapes differ");
  double total = 0.0;
  for (int t = 0; t <= a.horizon(); ++t)
    for (int x = 0; x < a.num_states(); ++x) total += std::abs(a.average(t, x) - b.average(t, x));
  return total;
}

// ---------------------------------------------------------------------------
// Equilibrium learning

SolverResult fixed_point_iteration(const MfgProblem& problem, const LayerGrids& grids,
                                   const PolicyEnsemble& initial_policy,
                                   const FixedPointOptions& options) {
  if (options.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(options.damping >= 0.0 && options.damping < 1.0))
    throw std::invalid_argument("damping must lie in [0,1)");
  const int threads = options.threads;

  SolverResult result;
  PolicyEnsemble policy = initial_policy;
  auto prop = forward_propagate(problem, grids, policy, threads);
  MeanFieldEnsemble mf = std::move(prop.mean_field);
  NeighborhoodTrajectory nbhd = std::move(prop.neighborhoods);
  BestResponse br = best_response(problem, nbhd, threads);

  for (int n = 1; n <= options.iterations; ++n) {
    PolicyEnsemble next_policy = std::move(br.policy);
    auto induced = forward_propagate(problem, grids, next_policy, threads);
    BestResponse next_br = best_response(problem, induced.neighborhoods, threads);
    const auto current = evaluate_policy(problem, induced.neighborhoods, next_policy, threads);
    const double expl = gap(problem, next_br.values, current).value;

    MeanFieldEnsemble next_mf;
    if (options.damping > 0.0) {
      next_mf = induced.mean_field;
      auto out = next_mf.data();
      const auto old = mf.data();
      for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = (1.0 - options.damping) * out[k] + options.damping * old[k];
      nbhd = neighborhood_trajectory(grids, next_mf, threads);
      next_br = best_response(problem, nbhd, threads);
    } else {
      next_mf = std::move(induced.mean_field);
      nbhd = std::move(induced.neighborhoods);
    }

    result.diagnostics.push_back({n, expl, mf_distance(next_mf, mf), !(next_policy == policy)});
    policy = std::move(next_policy);
    mf = std::move(next_mf);
    br = std::move(next_br);
    if (expl <= options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.policy = std::move(policy);
  result.mean_field = std::move(mf);
  return result;
}

namespace {

void softmax_policy(const std::vector<double>& preferences, double temperature, PolicyEnsemble& policy) {
  auto out = policy.data();
  const std::size_t nu_count = static_cast<std::size_t>(policy.num_actions());
  for (std::size_t base = 0; base < out.size(); base += nu_count) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < nu_count; ++u) top = std::max(top, preferences[base + u] / temperature);
    double z = 0.0;
    for (std::size_t u = 0; u < nu_count; ++u) {
      out[base + u] = std::exp(preferences[base + u] / temperature - top);
      z += out[base + u];
    }
    for (std::size_t u = 0; u < nu_count; ++u) out[base + u] /= z;
  }
}

}  // namespace

SolverResult omd_iteration(const MfgProblem& problem, const LayerGrids& grids,
                           const MirrorDescentOptions& options) {
  if (options.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!(options.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(options.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (grids.empty()) throw std::invalid_argument("no layer grids");
  const int m = grids.front().resolution();
  const int horizon = problem.horizon;
  const int nx = problem.num_states();
  const int nu_count = problem.num_actions();
  const int threads = options.threads;

  std::vector<double> preferences(static_cast<std::size_t>(m) * static_cast<std::size_t>(horizon) *
                                      static_cast<std::size_t>(nx) * static_cast<std::size_t>(nu_count),
                                  0.0);
  PolicyEnsemble policy(m, horizon, nx, nu_count);
  softmax_policy(preferences, options.temperature, policy);

  SolverResult result;
  MeanFieldEnsemble previous;
  for (int n = 0;; ++n) {
    auto prop = forward_propagate(problem, grids, policy, threads);
    const auto br = best_response(problem, prop.neighborhoods, threads);
    const auto current = evaluate_policy(problem, prop.neighborhoods, policy, threads);
    const double expl = gap(problem, br.values, current).value;
    const double dist = n == 0 ? 0.0 : mf_distance(prop.mean_field, previous);
    result.diagnostics.push_back({n, expl, dist, n > 0});
    previous = std::move(prop.mean_field);
    if (n == options.iterations) break;

    std::size_t k = 0;
    for (int i = 0; i < m; ++i)
      for (int t = 0; t < horizon; ++t)
        for (int x = 0; x < nx; ++x)
          for (int u = 0; u < nu_count; ++u) preferences[k++] += options.learning_rate * current.q(i, t, x, u);
    softmax_policy(preferences, options.temperature, policy);
  }
  result.policy = std::move(policy);
  result.mean_field = std::move(previous);
  return result;
}

}  // namespace hmfg
