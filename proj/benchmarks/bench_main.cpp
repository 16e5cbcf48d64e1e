#include <benchmark/benchmark.h>

#include "orthoboot/dgp.hpp"
#include "orthoboot/harness.hpp"
#include "orthoboot/posterior.hpp"
#include "orthoboot/weights.hpp"

using namespace orthoboot;

static void BM_DirichletWeights(benchmark::State& state) {
  RandomStream rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(draw_dirichlet(n, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DirichletWeights)->Arg(500)->Arg(2000);

static void BM_ForestFit(benchmark::State& state) {
  RandomStream rng(2);
  const auto data = simulate_plm({.n = static_cast<std::size_t>(state.range(0)), .q = 5}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(data.x, data.y, {.seed = 3}));
}
BENCHMARK(BM_ForestFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_PosteriorSample(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  RandomStream rng(4);
  const auto data = simulate(cfg, rng);
  const auto fit = fit_nuisance(cfg, data, 5);
  PartialledOutScore score;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_posterior(data, score, fit, {.draws = 500}, RandomStream(6)));
  }
}
BENCHMARK(BM_PosteriorSample)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Replicate(benchmark::State& state) {
  ExperimentConfig cfg;
  std::size_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_replicate(cfg, r++));
}
BENCHMARK(BM_Replicate)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
