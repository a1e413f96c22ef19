#include <benchmark/benchmark.h>

#include "spatialqq/distributions.hpp"
#include "spatialqq/gof.hpp"
#include "spatialqq/spatial.hpp"

using namespace sqq;

namespace {

DataMatrix normal_sample(Index n, Index d) {
  RngStream rng(1, 0);
  return sample(DistributionSpec::standard_normal(d), n, rng);
}

void BM_SpatialQuantile(benchmark::State& state) {
  const Index n = state.range(0), d = state.range(1);
  const QuantileSolver solver(normal_sample(n, d));
  RngStream rng(2, 0);
  const auto grid = uniform_ball_grid(64, d, 0.99, rng);
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(grid[k++ % grid.size()]));
}
BENCHMARK(BM_SpatialQuantile)->Args({100, 2})->Args({100, 5})->Args({1000, 2})->Args({1000, 10});

void BM_QuantileField(benchmark::State& state) {
  const QuantileSolver solver(normal_sample(state.range(0), 3));
  RngStream rng(3, 0);
  const auto grid = uniform_ball_grid(state.range(1), 3, 0.99, rng);
  for (auto _ : state) benchmark::DoNotOptimize(quantile_field(solver, grid));
}
BENCHMARK(BM_QuantileField)->Args({100, 500})->Unit(benchmark::kMillisecond);

void BM_ModelQuantile(benchmark::State& state) {
  const ModelQuantileFunction model(DistributionSpec::standard_normal(3));
  RngStream rng(4, 0);
  const auto grid = uniform_ball_grid(256, 3, 0.99, rng);
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model(grid[k++ % grid.size()]));
}
BENCHMARK(BM_ModelQuantile);

}  // namespace
