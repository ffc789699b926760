#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hmfg/game.hpp"
#include "hmfg/random.hpp"

using namespace hmfg;

namespace {

// nu on one 3-uniform layer with all mass on a single neighbor pair.
NeighborhoodMeanField point_nu(int nx, int a, int b, double mass) {
  const std::vector<int> cards{3};
  auto nu = NeighborhoodMeanField::zeros(nx, cards);
  const std::vector<int> xs{a, b};
  nu.layers[0][nu.index(0, xs)] = mass;
  return nu;
}

std::vector<double> step(const MfgProblem& p, int t, int x, int u, const NeighborhoodMeanField& nu) {
  std::vector<double> next(static_cast<std::size_t>(p.num_states()), -1.0);
  p.transition(t, x, u, nu, next);
  return next;
}

NeighborhoodMeanField random_nu(Engine& e, int nx, const std::vector<int>& cards) {
  auto nu = NeighborhoodMeanField::zeros(nx, cards);
  for (auto& layer : nu.layers)
    for (auto& v : layer) v = uniform01(e) / static_cast<double>(layer.size());
  return nu;
}

}  // namespace

TEST_CASE("neighborhood mean field indexing") {
  const std::vector<int> cards{2, 3};
  auto nu = NeighborhoodMeanField::zeros(4, cards);
  CHECK(nu.layers[0].size() == 4);
  CHECK(nu.layers[1].size() == 16);
  const std::vector<int> xs{2, 3};
  CHECK(nu.index(1, xs) == 11);
  CHECK(nu.state_at(1, 11, 0) == 2);
  CHECK(nu.state_at(1, 11, 1) == 3);
  nu.layers[1][11] = 0.5;
  nu.layers[1][nu.index(1, std::vector<int>{3, 3})] = 0.25;
  CHECK(nu.mass(1) == 0.75);
  const char member[4] = {0, 0, 0, 1};
  // (2,3) has one slot in state 3, (3,3) has two
  CHECK(nu.expected_count(1, member) == doctest::Approx(0.5 + 0.5));
}

TEST_CASE("rumor transitions are stochastic and follow the extended chain") {
  using namespace rumor;
  const auto p = rumor_problem({}, {2, 3});
  CHECK(p.num_states() == 6);
  CHECK(p.num_actions() == 2);
  Engine e(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto nu = random_nu(e, 6, {2, 3});
    for (int x = 0; x < 6; ++x)
      for (int u = 0; u < 2; ++u) {
        const auto next = step(p, 0, x, u, nu);
        double s = 0.0;
        for (double v : next) {
          CHECK(v >= 0.0);
          s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
      }
  }
  const auto nu = random_nu(e, 6, {2, 3});
  CHECK(step(p, 0, kIgnorant, kSpread, nu)[kIgnorantSpread] == 1.0);
  CHECK(step(p, 0, kAware, kNoSpread, nu)[kAwareQuiet] == 1.0);
  CHECK(step(p, 0, kAwareQuiet, kSpread, nu)[kAware] == 1.0);
  CHECK(step(p, 0, kAwareSpread, kNoSpread, nu)[kAware] == 1.0);
  for (int x = 0; x < 6; ++x) CHECK(base_state(x) == (x == 0 || x == 2 || x == 3 ? kIgnorant : kAware));
}

TEST_CASE("rumor infection and reward on a single 3-uniform layer") {
  using namespace rumor;
  RumorParams params;
  params.tau = {0.3};
  params.gain = {0.5};
  params.cost = {0.8};
  const auto p = rumor_problem(params, {3});
  // both slots spreading with mass 0.5: expected spreaders = 1
  const auto nu = point_nu(6, kAwareSpread, kAwareSpread, 0.5);
  CHECK(step(p, 0, kIgnorantQuiet, 0, nu)[kAware] == doctest::Approx(0.3));
  // one ignorant, one aware slot: reward = 0.5 * 0.5 - 0.8 * 0.5
  const auto mixed = point_nu(6, kIgnorantSpread, kAwareQuiet, 0.5);
  CHECK(p.reward(0, kAwareSpread, 0, mixed) == doctest::Approx(0.25 - 0.4));
  CHECK(p.reward(0, kAwareQuiet, 0, mixed) == 0.0);
  CHECK(p.reward(0, kIgnorantSpread, 1, mixed) == 0.0);
  CHECK(step(p, 0, kIgnorantQuiet, 0, mixed)[kAware] == 0.0);
  // infection probability is capped at one
  const auto heavy = point_nu(6, kAwareSpread, kAwareSpread, 5.0);
  CHECK(step(p, 0, kIgnorantSpread, 0, heavy)[kAware] == 1.0);
}

TEST_CASE("rumor initial distribution") {
  RumorParams params;
  params.initial_aware = 0.1;
  const auto p = rumor_problem(params, {2, 3});
  CHECK(p.initial_distribution(0.3) == std::vector<double>{0.9, 0.1, 0, 0, 0, 0});
  params.aware_threshold = 0.5;
  const auto q = rumor_problem(params, {2, 3});
  CHECK(q.initial_distribution(0.5)[rumor::kAware] == 0.0);
  CHECK(q.initial_distribution(0.51)[rumor::kAware] == 1.0);
  params.aware_level = 0.25;
  CHECK(rumor_problem(params, {2, 3}).initial_distribution(0.9)[rumor::kAware] == 0.25);
}

TEST_CASE("parameter validation") {
  RumorParams bad;
  bad.tau = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(rumor_problem(bad, {2, 3}), std::invalid_argument);
  RumorParams neg;
  neg.cost = {-1};
  CHECK_THROWS_AS(rumor_problem(neg, {2, 3}), std::invalid_argument);
  RumorParams horizon;
  horizon.horizon = 0;
  CHECK_THROWS_AS(rumor_problem(horizon, {2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(rumor_problem({}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(rumor_problem({}, {}), std::invalid_argument);
  SisParams s;
  s.recovery = 1.5;
  CHECK_THROWS_AS(sis_problem(s, {2}), std::invalid_argument);

  MfgProblem p = sis_problem({}, {2});
  p.gamma = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.gamma = 1.0;
  p.reward = nullptr;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("SIS dynamics and costs") {
  using namespace sis;
  SisParams params;
  params.tau = {0.8};
  params.recovery = 0.2;
  const auto p = sis_problem(params, {2});
  const std::vector<int> cards{2};
  auto nu = NeighborhoodMeanField::zeros(2, cards);
  nu.layers[0] = {0.5, 0.25};
  CHECK(step(p, 0, kSusceptible, kNoPrecaution, nu)[kInfected] == doctest::Approx(0.2));
  CHECK(step(p, 0, kSusceptible, kPrecaution, nu)[kInfected] == 0.0);
  CHECK(step(p, 0, kInfected, kPrecaution, nu)[kSusceptible] == doctest::Approx(0.2));
  CHECK(p.reward(0, kSusceptible, kNoPrecaution, nu) == 0.0);
  CHECK(p.reward(0, kSusceptible, kPrecaution, nu) == -0.5);
  CHECK(p.reward(0, kInfected, kNoPrecaution, nu) == -2.0);
  CHECK(p.reward(0, kInfected, kPrecaution, nu) == -2.5);
  CHECK(p.initial_distribution(0.7) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("extended state space reproduces one base step") {
  // base: 2 states, 2 actions, one 2-uniform layer whose nu is over (x,u) pairs
  ActionCoupledProblem base;
  base.states = {"a", "b"};
  base.actions = {"l", "r"};
  base.horizon = 2;
  base.gamma = 0.81;
  base.layer_cardinalities = {2};
  base.initial_distribution = [](double alpha) { return std::vector<double>{alpha, 1 - alpha}; };
  base.transition = [](int t, int x, int u, const NeighborhoodMeanField& nu, std::span<double> next) {
    const double q = std::min(1.0, 0.1 * (t + 1) + 0.2 * x + 0.3 * u + nu.layers[0][3]);
    next[0] = 1 - q;
    next[1] = q;
  };
  base.reward = [](int t, int x, int u, const NeighborhoodMeanField& nu) {
    return 1.0 + t + 2.0 * x - u + 4.0 * nu.layers[0][1];
  };
  const auto ext = extend_state_space(base);
  CHECK(ext.num_states() == 6);
  CHECK(ext.horizon == 4);
  CHECK(ext.gamma == doctest::Approx(0.9));
  CHECK(ext.initial_distribution(0.25) == std::vector<double>{0.25, 0.75, 0, 0, 0, 0});

  const std::vector<int> cards{2};
  auto ext_nu = NeighborhoodMeanField::zeros(6, cards);
  ext_nu.layers[0] = {0.05, 0.05, 0.1, 0.2, 0.15, 0.3};
  auto base_nu = NeighborhoodMeanField::zeros(4, cards);
  base_nu.layers[0] = {0.1, 0.2, 0.15, 0.3};

  for (int x = 0; x < 2; ++x)
    for (int u = 0; u < 2; ++u) {
      // bare state: deterministic move to the pair, no reward
      auto next = step(ext, 2, x, u, ext_nu);
      CHECK(next[static_cast<std::size_t>(2 + 2 * x + u)] == 1.0);
      CHECK(ext.reward(2, x, u, ext_nu) == 0.0);
      // pair state: base transition at epoch t/2, discounted reward
      std::vector<double> expect(2);
      base.transition(1, x, u, base_nu, expect);
      next = step(ext, 3, 2 + 2 * x + u, 0, ext_nu);
      CHECK(next[0] == doctest::Approx(expect[0]));
      CHECK(next[1] == doctest::Approx(expect[1]));
      CHECK(next[2] + next[3] + next[4] + next[5] == 0.0);
      // gamma_ext^3 * r / gamma_ext = gamma_ext^2 * r = gamma^1 * r
      CHECK(std::pow(ext.gamma, 3) * ext.reward(3, 2 + 2 * x + u, 1, ext_nu) ==
            doctest::Approx(base.gamma * base.reward(1, x, u, base_nu)));
    }
}
