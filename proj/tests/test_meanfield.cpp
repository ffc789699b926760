#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hmfg/meanfield.hpp"
#include "oracles.hpp"

using namespace hmfg;

namespace {

MeanFieldEnsemble random_mf(Engine& e, int m, int horizon, int nx) {
  MeanFieldEnsemble mf(m, horizon, nx);
  for (int i = 0; i < m; ++i)
    for (int t = 0; t <= horizon; ++t) {
      double s = 0.0;
      for (int x = 0; x < nx; ++x) s += mf(i, t, x) = uniform01(e) + 0.01;
      for (int x = 0; x < nx; ++x) mf(i, t, x) /= s;
    }
  return mf;
}

PolicyEnsemble random_policy(Engine& e, int m, int horizon, int nx, int nu) {
  PolicyEnsemble pi(m, horizon, nx, nu);
  for (int i = 0; i < m; ++i)
    for (int t = 0; t < horizon; ++t)
      for (int x = 0; x < nx; ++x) {
        auto row = pi.at(i, t, x);
        double s = 0.0;
        for (auto& v : row) s += v = uniform01(e);
        for (auto& v : row) v /= s;
      }
  return pi;
}

LayerGrids rumor_grids(int m) {
  return discretize_all(MultiLayerHypergraphon({builtin("unif2"), builtin("unif3")}), m);
}

MfgProblem small_rumor(int horizon = 8) {
  RumorParams params;
  params.horizon = horizon;
  params.initial_aware = 0.2;
  return rumor_problem(params, {2, 3});
}

}  // namespace

TEST_CASE("ensemble containers") {
  MeanFieldEnsemble mf(3, 2, 4);
  mf(2, 1, 3) = 0.5;
  CHECK(mf.at(2, 1)[3] == 0.5);
  CHECK(mf.average(1, 3) == doctest::Approx(0.5 / 3));
  const auto u = PolicyEnsemble::uniform(2, 3, 2, 4);
  for (double v : u.data()) CHECK(v == 0.25);
  PolicyEnsemble p(1, 1, 1, 3);
  p.at(0, 0, 0)[1] = 0.4;
  p.at(0, 0, 0)[2] = 0.4;
  CHECK(p.greedy_action(0, 0, 0) == 1);
  CHECK(grid_point(0, 4) == 0.125);
  CHECK(grid_point(3, 4) == 0.875);
}

TEST_CASE("neighborhood mean field matches the tuple-by-tuple sum") {
  Engine e(21);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = oracle::random_tiny_instance(seed, 4);
    const auto mf = random_mf(e, 4, 3, 2);
    for (int i = 0; i < 4; ++i)
      for (int t = 0; t <= 3; ++t) {
        const auto fast = neighborhood_mf(inst.grids, mf, i, t);
        const auto slow = oracle::neighborhood(inst.grids, mf, i, t);
        for (std::size_t d = 0; d < 2; ++d)
          for (std::size_t j = 0; j < fast.layers[d].size(); ++j)
            CHECK(fast.layers[d][j] == doctest::Approx(slow.layers[d][j]).epsilon(1e-13));
      }
  }
  // three states on the rumor grids
  const auto grids = rumor_grids(5);
  const auto mf = random_mf(e, 5, 1, 6);
  const auto fast = neighborhood_mf(grids, mf, 3, 1);
  const auto slow = oracle::neighborhood(grids, mf, 3, 1);
  for (std::size_t d = 0; d < 2; ++d)
    for (std::size_t j = 0; j < fast.layers[d].size(); ++j)
      CHECK(fast.layers[d][j] == doctest::Approx(slow.layers[d][j]).epsilon(1e-13));
}

TEST_CASE("neighborhood mass equals the kernel's row average") {
  Engine e(4);
  const int m = 6;
  const auto grids = rumor_grids(m);
  const auto mf = random_mf(e, m, 2, 6);
  for (int i = 0; i < m; ++i) {
    const auto nu = neighborhood_mf(grids, mf, i, 1);
    for (std::size_t d = 0; d < grids.size(); ++d) {
      const int k = grids[d].cardinality();
      double row = 0.0;
      std::vector<int> idx(static_cast<std::size_t>(k), 0);
      idx[0] = i;
      for (std::size_t flat = 0; flat < std::pow(m, k - 1); ++flat) {
        std::size_t rest = flat;
        for (int s = k - 1; s >= 1; --s) {
          idx[s] = static_cast<int>(rest % m);
          rest /= m;
        }
        row += grids[d].at(idx);
      }
      CHECK(nu.mass(d) == doctest::Approx(row / std::pow(m, k - 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("forward propagation matches the literal recursion and conserves mass") {
  Engine e(8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = oracle::random_tiny_instance(seed, 3);
    const auto pi = random_policy(e, 3, 3, 2, 2);
    const auto fast = forward_propagate(inst.problem, inst.grids, pi);
    const auto slow = oracle::forward(inst.problem, inst.grids, pi);
    for (std::size_t j = 0; j < slow.data().size(); ++j)
      CHECK(fast.mean_field.data()[j] == doctest::Approx(slow.data()[j]).epsilon(1e-13));
  }
  const auto p = small_rumor();
  const auto grids = rumor_grids(4);
  const auto pi = random_policy(e, 4, p.horizon, 6, 2);
  const auto a = forward_propagate(p, grids, pi, 1);
  const auto b = forward_propagate(p, grids, pi, 3);
  CHECK(a.mean_field == b.mean_field);
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t <= p.horizon; ++t) {
      const auto row = a.mean_field.at(i, t);
      CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("best response equals exhaustive enumeration") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    CAPTURE(seed);
    Engine e(seed);
    const auto inst = oracle::random_tiny_instance(seed);
    const auto mf = random_mf(e, 2, 3, 2);
    const auto nbhd = neighborhood_trajectory(inst.grids, mf);
    const auto br = best_response(inst.problem, nbhd);
    const auto v0 = initial_values(inst.problem, br.values);
    for (int i = 0; i < 2; ++i) CHECK(v0[i] == doctest::Approx(oracle::best_value_by_enumeration(inst.problem, nbhd, i)).epsilon(1e-12));
  }
}

TEST_CASE("Bellman consistency and policy evaluation") {
  Engine e(9);
  const auto p = small_rumor();
  const auto grids = rumor_grids(4);
  const auto mf = forward_propagate(p, grids, random_policy(e, 4, p.horizon, 6, 2)).mean_field;
  const auto nbhd = neighborhood_trajectory(grids, mf);
  const auto br = best_response(p, nbhd);
  std::vector<double> next(6);
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < p.horizon; ++t)
      for (int x = 0; x < 6; ++x) {
        double best = -INFINITY;
        for (int u = 0; u < 2; ++u) {
          p.transition(t, x, u, nbhd.at(i, t), next);
          double q = p.reward(t, x, u, nbhd.at(i, t));
          for (int y = 0; y < 6; ++y) q += p.gamma * next[y] * br.values.v(i, t + 1, y);
          CHECK(br.values.q(i, t, x, u) == doctest::Approx(q).epsilon(1e-13));
          best = std::max(best, q);
        }
        CHECK(br.values.v(i, t, x) == doctest::Approx(best).epsilon(1e-13));
        // ties go to the lowest action
        const int a = br.policy.greedy_action(i, t, x);
        CHECK(br.policy.at(i, t, x)[a] == 1.0);
        if (a == 1) CHECK(br.values.q(i, t, x, 0) < br.values.q(i, t, x, 1));
      }
  const auto ev = evaluate_policy(p, nbhd, br.policy);
  for (int i = 0; i < 4; ++i)
    for (int x = 0; x < 6; ++x) CHECK(ev.v(i, 0, x) == doctest::Approx(br.values.v(i, 0, x)).epsilon(1e-13));

  // evaluation of an arbitrary deterministic policy against the distribution-forward oracle
  const auto inst = oracle::random_tiny_instance(7);
  const auto tmf = random_mf(e, 2, 3, 2);
  const auto tn = neighborhood_trajectory(inst.grids, tmf);
  std::vector<std::vector<int>> table{{0, 1}, {1, 1}, {1, 0}};
  PolicyEnsemble det(2, 3, 2, 2);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 3; ++t)
      for (int x = 0; x < 2; ++x) det.at(i, t, x)[table[t][x]] = 1.0;
  const auto v0 = initial_values(inst.problem, evaluate_policy(inst.problem, tn, det));
  for (int i = 0; i < 2; ++i) CHECK(v0[i] == doctest::Approx(oracle::policy_value(inst.problem, tn, i, table)).epsilon(1e-13));
}

TEST_CASE("best response is invariant to adding a constant to rewards") {
  Engine e(10);
  auto p = small_rumor();
  const auto grids = rumor_grids(3);
  const auto mf = forward_propagate(p, grids, random_policy(e, 3, p.horizon, 6, 2)).mean_field;
  const auto a = best_response(p, grids, mf);
  auto shifted = p;
  shifted.reward = [r = p.reward](int t, int x, int u, const NeighborhoodMeanField& nu) {
    return r(t, x, u, nu) + 3.0;
  };
  const auto b = best_response(shifted, grids, mf);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < p.horizon; ++t)
      for (int x = 0; x < 6; ++x)
        if (std::fabs(a.values.q(i, t, x, 0) - a.values.q(i, t, x, 1)) > 1e-9)
          CHECK(a.policy.greedy_action(i, t, x) == b.policy.greedy_action(i, t, x));
}

TEST_CASE("exploitability") {
  Engine e(12);
  const auto p = small_rumor();
  const auto grids = rumor_grids(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pi = random_policy(e, 4, p.horizon, 6, 2);
    const auto prop = forward_propagate(p, grids, pi);
    const auto ex = exploitability(p, prop.neighborhoods, pi);
    CHECK(ex.value >= 0.0);
    for (double v : ex.per_grid_point) CHECK(v >= -1e-12);
    CHECK(ex.value == doctest::Approx(std::accumulate(ex.per_grid_point.begin(), ex.per_grid_point.end(), 0.0) / 4));
    CHECK(exploitability(p, grids, pi) == ex.value);
  }
  // with zero rewards every policy is an equilibrium
  auto zero = p;
  zero.reward = [](int, int, int, const NeighborhoodMeanField&) { return 0.0; };
  CHECK(exploitability(zero, grids, random_policy(e, 4, p.horizon, 6, 2)) == 0.0);
}

TEST_CASE("mf_distance") {
  Engine e(13);
  const auto a = random_mf(e, 3, 4, 3), b = random_mf(e, 3, 4, 3);
  CHECK(mf_distance(a, a) == 0.0);
  CHECK(mf_distance(a, b) == doctest::Approx(oracle::mf_distance(a, b)).epsilon(1e-14));
  CHECK(mf_distance(a, b) == doctest::Approx(mf_distance(b, a)).epsilon(1e-15));
  // two point masses swapped at every t: 2 per time, T + 1 times
  MeanFieldEnsemble x(1, 2, 2), y(1, 2, 2);
  for (int t = 0; t <= 2; ++t) {
    x(0, t, 0) = 1;
    y(0, t, 1) = 1;
  }
  CHECK(mf_distance(x, y) == 6.0);
}

TEST_CASE("fixed-point iteration") {
  const auto p = small_rumor(10);
  const auto grids = rumor_grids(6);
  const auto start = PolicyEnsemble::uniform(6, p.horizon, 6, 2);
  FixedPointOptions opts;
  opts.iterations = 50;
  const auto r = fixed_point_iteration(p, grids, start, opts);
  REQUIRE(!r.diagnostics.empty());
  CHECK(r.converged);
  CHECK(r.diagnostics.back().exploitability <= opts.tolerance);
  CHECK(exploitability(p, grids, r.policy) == doctest::Approx(r.diagnostics.back().exploitability));
  CHECK(forward_propagate(p, grids, r.policy).mean_field == r.mean_field);
  for (std::size_t n = 0; n < r.diagnostics.size(); ++n) CHECK(r.diagnostics[n].iteration == static_cast<int>(n) + 1);

  opts.threads = 3;
  const auto again = fixed_point_iteration(p, grids, start, opts);
  CHECK(again.policy == r.policy);
  CHECK(again.mean_field == r.mean_field);

  FixedPointOptions capped;
  capped.iterations = 1;
  capped.tolerance = -1;
  const auto one = fixed_point_iteration(p, grids, start, capped);
  CHECK(one.diagnostics.size() == 1);
  CHECK_FALSE(one.converged);
}

TEST_CASE("online mirror descent") {
  SisParams sp;
  sp.horizon = 6;
  const auto p = sis_problem(sp, {2, 3});
  const auto grids = discretize_all(MultiLayerHypergraphon({builtin("rank2"), builtin("rank3")}), 4);
  MirrorDescentOptions opts;
  opts.iterations = 5;
  const auto r = omd_iteration(p, grids, opts);
  REQUIRE(r.diagnostics.size() == 6);
  CHECK(r.diagnostics[0].iteration == 0);
  CHECK(r.diagnostics[0].exploitability ==
        doctest::Approx(exploitability(p, grids, PolicyEnsemble::uniform(4, 6, 2, 2))));
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < 6; ++t)
      for (int x = 0; x < 2; ++x) {
        const auto row = r.policy.at(i, t, x);
        CHECK(row[0] > 0.0);
        CHECK(row[1] > 0.0);
        CHECK(row[0] + row[1] == doctest::Approx(1.0));
      }
  // only eta / temperature matters
  MirrorDescentOptions scaled = opts;
  scaled.learning_rate = 2.0;
  scaled.temperature = 2.0;
  const auto s = omd_iteration(p, grids, scaled);
  for (std::size_t j = 0; j < r.policy.data().size(); ++j)
    CHECK(s.policy.data()[j] == doctest::Approx(r.policy.data()[j]).epsilon(1e-12));
}
