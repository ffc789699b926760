#include <benchmark/benchmark.h>

#include <memory>

#include "hmfg/kernels.hpp"
#include "hmfg/meanfield.hpp"
#include "hmfg/simulate.hpp"

using namespace hmfg;

namespace {

MultiLayerHypergraphon rumor_layers() { return MultiLayerHypergraphon({builtin("unif2"), builtin("unif3")}); }

MfgProblem rumor(int horizon) {
  RumorParams p;
  p.horizon = horizon;
  return rumor_problem(p, {2, 3});
}

void BM_Discretize(benchmark::State& state) {
  const auto layer = builtin("inv_unif3");
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(discretize(layer, m));
}
BENCHMARK(BM_Discretize)->Arg(25)->Arg(50);

void BM_NeighborhoodTrajectory(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto p = rumor(50);
  const auto grids = discretize_all(rumor_layers(), m);
  const auto mf = forward_propagate(p, grids, PolicyEnsemble::uniform(m, 50, 6, 2)).mean_field;
  for (auto _ : state) benchmark::DoNotOptimize(neighborhood_trajectory(grids, mf));
}
BENCHMARK(BM_NeighborhoodTrajectory)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_BestResponse(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto p = rumor(50);
  const auto grids = discretize_all(rumor_layers(), m);
  const auto prop = forward_propagate(p, grids, PolicyEnsemble::uniform(m, 50, 6, 2));
  for (auto _ : state) benchmark::DoNotOptimize(best_response(p, prop.neighborhoods));
}
BENCHMARK(BM_BestResponse)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& state) {
  const auto w = rumor_layers();
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample(w, n, seed++, AlphaMode::uniform));
}
BENCHMARK(BM_Sample)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), m = 50;
  const auto p = rumor(50);
  const auto graph = std::make_shared<MultiLayerHypergraph>(sample(rumor_layers(), n, 1, AlphaMode::grid));
  const auto policies = share_policy(PolicyEnsemble::uniform(m, 50, 6, 2), n);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_game(p, graph, policies, std::nullopt, seed++));
}
BENCHMARK(BM_Simulate)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
