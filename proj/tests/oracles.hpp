#pragma once

// Reference implementations used only by the tests. They follow the
// defining formulas literally and share no code with the library beyond
// the problem callbacks and data containers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "hmfg/game.hpp"
#include "hmfg/hypergraph.hpp"
#include "hmfg/meanfield.hpp"
#include "hmfg/random.hpp"

namespace oracle {

using namespace hmfg;

// Objective of one deterministic Markov policy (table[t][x] = action) for
// grid point i, by propagating the state distribution forward.
inline double policy_value(const MfgProblem& problem, const NeighborhoodTrajectory& nbhd, int i,
                           const std::vector<std::vector<int>>& table) {
  const int nx = problem.num_states();
  const int m = nbhd.resolution();
  std::vector<double> dist = problem.initial_distribution(grid_point(i, m));
  std::vector<double> p(static_cast<std::size_t>(nx));
  double total = 0.0, discount = 1.0;
  for (int t = 0; t < problem.horizon; ++t) {
    std::vector<double> next(static_cast<std::size_t>(nx), 0.0);
    for (int x = 0; x < nx; ++x) {
      if (dist[x] == 0.0) continue;
      const int u = table[t][x];
      total += discount * dist[x] * problem.reward(t, x, u, nbhd.at(i, t));
      problem.transition(t, x, u, nbhd.at(i, t), p);
      for (int y = 0; y < nx; ++y) next[y] += dist[x] * p[y];
    }
    dist = std::move(next);
    discount *= problem.gamma;
  }
  return total;
}

// sup over all deterministic Markov policies, by exhaustive enumeration.
inline double best_value_by_enumeration(const MfgProblem& problem, const NeighborhoodTrajectory& nbhd, int i) {
  const int nx = problem.num_states(), nu = problem.num_actions(), horizon = problem.horizon;
  const int cells = nx * horizon;
  std::vector<int> digits(static_cast<std::size_t>(cells), 0);
  double best = -INFINITY;
  while (true) {
    std::vector<std::vector<int>> table(static_cast<std::size_t>(horizon), std::vector<int>(static_cast<std::size_t>(nx)));
    for (int c = 0; c < cells; ++c) table[c / nx][c % nx] = digits[c];
    best = std::max(best, policy_value(problem, nbhd, i, table));
    int pos = 0;
    while (pos < cells && ++digits[pos] == nu) digits[pos++] = 0;
    if (pos == cells) break;
  }
  return best;
}

// nu_d(x_1..x_{k-1}) = M^{-(k-1)} sum_{j} grid[i, j] prod_r mu^{j_r}_t(x_r),
// enumerated tuple by tuple.
inline NeighborhoodMeanField neighborhood(const LayerGrids& grids, const MeanFieldEnsemble& mf, int i, int t) {
  std::vector<int> cards;
  for (const auto& g : grids) cards.push_back(g.cardinality());
  auto nu = NeighborhoodMeanField::zeros(mf.num_states(), cards);
  const int m = mf.resolution(), nx = mf.num_states();
  for (std::size_t d = 0; d < grids.size(); ++d) {
    const int slots = cards[d] - 1;
    const double scale = std::pow(static_cast<double>(m), -slots);
    std::vector<int> js(static_cast<std::size_t>(slots), 0);
    while (true) {
      std::vector<int> index{i};
      index.insert(index.end(), js.begin(), js.end());
      const double w = grids[d].at(index);
      std::vector<int> xs(static_cast<std::size_t>(slots), 0);
      while (true) {
        double prod = w * scale;
        for (int r = 0; r < slots; ++r) prod *= mf(js[r], t, xs[r]);
        nu.layers[d][nu.index(d, xs)] += prod;
        int pos = slots - 1;
        while (pos >= 0 && ++xs[pos] == nx) xs[pos--] = 0;
        if (pos < 0) break;
      }
      int pos = slots - 1;
      while (pos >= 0 && ++js[pos] == m) js[pos--] = 0;
      if (pos < 0) break;
    }
  }
  return nu;
}

// sum_x sum_{t=0..T} |avg_i a - avg_i b|, written out directly.
inline double mf_distance(const MeanFieldEnsemble& a, const MeanFieldEnsemble& b) {
  double total = 0.0;
  for (int t = 0; t <= a.horizon(); ++t)
    for (int x = 0; x < a.num_states(); ++x) {
      double sa = 0.0, sb = 0.0;
      for (int i = 0; i < a.resolution(); ++i) {
        sa += a(i, t, x);
        sb += b(i, t, x);
      }
      total += std::fabs(sa / a.resolution() - sb / b.resolution());
    }
  return total;
}

// Empirical nu by scanning every ordered tuple in [N]^{k-1}.
inline NeighborhoodMeanField empirical_neighborhood(const MultiLayerHypergraph& graph, const std::vector<int>& states,
                                                    int num_states, int agent) {
  auto nu = NeighborhoodMeanField::zeros(num_states, graph.cardinalities());
  const int n = graph.vertex_count();
  for (std::size_t d = 0; d < graph.depth(); ++d) {
    const int slots = graph.layer(d).cardinality() - 1;
    const double w = std::pow(static_cast<double>(n), -slots);
    std::vector<int> m(static_cast<std::size_t>(slots), 0);
    while (true) {
      std::vector<int> members(m.begin(), m.end());
      members.push_back(agent);
      std::vector<int> sorted = members;
      std::sort(sorted.begin(), sorted.end());
      const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
      if (distinct && graph.layer(d).contains(members)) {
        std::vector<int> xs;
        for (int v : m) xs.push_back(states[v]);
        nu.layers[d][nu.index(d, xs)] += w;
      }
      int pos = slots - 1;
      while (pos >= 0 && ++m[pos] == n) m[pos--] = 0;
      if (pos < 0) break;
    }
  }
  return nu;
}

// Exact distribution of the joint terminal state of an N-agent SIS game on
// the complete 2-uniform graph, by enumerating every joint initial state,
// joint action and joint transition. policy(t, x) = P(precaution).
inline std::map<std::vector<int>, double> sis_complete_graph_terminal(int agents, int horizon, double tau,
                                                                      double recovery, double initial_infected,
                                                                      const std::function<double(int, int)>& precaution) {
  std::map<std::vector<int>, double> current;
  for (int mask = 0; mask < (1 << agents); ++mask) {
    std::vector<int> s(static_cast<std::size_t>(agents));
    double p = 1.0;
    for (int i = 0; i < agents; ++i) {
      s[i] = (mask >> i) & 1;
      p *= s[i] ? initial_infected : 1.0 - initial_infected;
    }
    current[s] += p;
  }
  for (int t = 0; t < horizon; ++t) {
    std::map<std::vector<int>, double> next;
    for (const auto& [s, ps] : current) {
      int infected = 0;
      for (int x : s) infected += x;
      // per-agent probability of being infected next, given own action
      for (int amask = 0; amask < (1 << agents); ++amask) {
        double pa = 1.0;
        std::vector<double> p_inf(static_cast<std::size_t>(agents));
        for (int i = 0; i < agents; ++i) {
          const int u = (amask >> i) & 1;
          const double pp = precaution(t, s[i]);
          pa *= u ? pp : 1.0 - pp;
          if (s[i] == 1) {
            p_inf[i] = 1.0 - recovery;
          } else if (u == 1) {
            p_inf[i] = 0.0;
          } else {
            // neighbours are the other N-1 agents, each weighted 1/N
            p_inf[i] = std::min(1.0, tau * static_cast<double>(infected) / agents);
          }
        }
        if (pa == 0.0) continue;
        for (int nmask = 0; nmask < (1 << agents); ++nmask) {
          std::vector<int> ns(static_cast<std::size_t>(agents));
          double pt = 1.0;
          for (int i = 0; i < agents; ++i) {
            ns[i] = (nmask >> i) & 1;
            pt *= ns[i] ? p_inf[i] : 1.0 - p_inf[i];
          }
          if (pt != 0.0) next[ns] += ps * pa * pt;
        }
      }
    }
    current = std::move(next);
  }
  return current;
}

// Random tiny instance: |X| = |U| = 2, one 2-uniform and one 3-uniform
// layer with random symmetric M x M grids. Transitions and rewards depend
// on the neighborhood through c = (E#_1 + E#_2 / 2) / 2 in [0, 1], the
// expected share of neighbor slots in state 1.
struct TinyInstance {
  MfgProblem problem;
  LayerGrids grids;
};

inline TinyInstance random_tiny_instance(std::uint64_t seed, int resolution = 2, int horizon = 3) {
  Engine e(seed);
  auto u = [&] { return uniform01(e); };
  const int cells = horizon * 4;
  std::vector<double> a(cells), b(cells), r(cells), s(cells);
  for (int c = 0; c < cells; ++c) {
    a[c] = u();
    b[c] = u();
    r[c] = 2 * u() - 1;
    s[c] = 2 * u() - 1;
  }
  const double w0 = u(), w1 = u() * (1 - w0);

  TinyInstance inst;
  auto& p = inst.problem;
  p.states = {"x0", "x1"};
  p.actions = {"u0", "u1"};
  p.horizon = horizon;
  p.gamma = 0.5 + 0.5 * u();
  p.layer_cardinalities = {2, 3};
  p.initial_distribution = [w0, w1](double alpha) {
    const double q = w0 + w1 * alpha;
    return std::vector<double>{1 - q, q};
  };
  auto share = [](const NeighborhoodMeanField& nu) {
    static constexpr char kOne[2] = {0, 1};
    return (nu.expected_count(0, kOne) + nu.expected_count(1, kOne) / 2) / 2;
  };
  p.transition = [a, b, share](int t, int x, int act, const NeighborhoodMeanField& nu, std::span<double> next) {
    const int c = (t * 2 + x) * 2 + act;
    const double w = share(nu);
    const double q = a[c] * (1 - w) + b[c] * w;
    next[0] = 1 - q;
    next[1] = q;
  };
  p.reward = [r, s, share](int t, int x, int act, const NeighborhoodMeanField& nu) {
    const int c = (t * 2 + x) * 2 + act;
    return r[c] + s[c] * share(nu);
  };

  for (int k : {2, 3}) {
    VertexKernelGrid g(k, resolution);
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    // draw each sorted index tuple once and mirror it
    while (true) {
      if (std::is_sorted(idx.begin(), idx.end())) g.set_symmetric(idx, u());
      int pos = k - 1;
      while (pos >= 0 && ++idx[pos] == resolution) idx[pos--] = 0;
      if (pos < 0) break;
    }
    inst.grids.push_back(std::move(g));
  }
  return inst;
}

// Psi written out directly: mu_{t+1}(y) = sum_x mu_t(x) sum_u pi(u|x) P(y|x,u,nu).
inline MeanFieldEnsemble forward(const MfgProblem& problem, const LayerGrids& grids, const PolicyEnsemble& policy) {
  const int m = policy.resolution(), nx = problem.num_states(), nu_count = problem.num_actions();
  MeanFieldEnsemble mf(m, problem.horizon, nx);
  for (int i = 0; i < m; ++i) {
    const auto mu0 = problem.initial_distribution(grid_point(i, m));
    for (int x = 0; x < nx; ++x) mf(i, 0, x) = mu0[x];
  }
  std::vector<double> p(static_cast<std::size_t>(nx));
  for (int t = 0; t < problem.horizon; ++t)
    for (int i = 0; i < m; ++i) {
      const auto nu = neighborhood(grids, mf, i, t);
      for (int x = 0; x < nx; ++x)
        for (int a = 0; a < nu_count; ++a) {
          problem.transition(t, x, a, nu, p);
          for (int y = 0; y < nx; ++y) mf(i, t + 1, y) += mf(i, t, x) * policy.at(i, t, x)[a] * p[y];
        }
    }
  return mf;
}

}  // namespace oracle
