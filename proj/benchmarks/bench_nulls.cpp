#include <benchmark/benchmark.h>

#include "spatialqq/baselines.hpp"
#include "spatialqq/gof.hpp"

using namespace sqq;

namespace {

struct Setup {
  std::vector<QuantileIndex> grid;
  KernelEstimate kernel;
};

Setup model_kernel(Index m, Index d) {
  const auto f0 = DistributionSpec::standard_normal(d);
  RngStream grid_rng(1, 0), kernel_rng(1, 1);
  Setup s;
  s.grid = uniform_ball_grid(m, d, 0.99, grid_rng);
  const ModelQuantileFunction model(f0);
  std::vector<Vector> q;
  for (const auto& u : s.grid) q.push_back(model(u));
  s.kernel = estimate_kernel(f0, s.grid, q, 10000, kernel_rng);
  return s;
}

void BM_KernelEstimate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(model_kernel(state.range(0), 2));
}
BENCHMARK(BM_KernelEstimate)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_NullOneSample(benchmark::State& state) {
  const auto s = model_kernel(state.range(0), 2);
  const auto scheme = state.range(1) == 0 ? NullScheme::EigenWeightedChiSquare : NullScheme::CholeskyProcess;
  for (auto _ : state) {
    RngStream rng(2, 0);
    benchmark::DoNotOptimize(null_one_sample(s.kernel, 1000, rng, scheme));
  }
  state.SetLabel(state.range(1) == 0 ? "eigen" : "cholesky");
}
BENCHMARK(BM_NullOneSample)->Args({200, 0})->Args({200, 1})->Unit(benchmark::kMillisecond);

void BM_TwoSampleTest(benchmark::State& state) {
  RngStream rng(3, 0);
  const auto f = DistributionSpec::standard_normal(2);
  const auto x = sample(f, 100, rng), y = sample(f, 100, rng);
  GofConfig cfg;
  cfg.grid_size = state.range(0);
  cfg.null_replicates = 500;
  for (auto _ : state) benchmark::DoNotOptimize(test_two_sample(x, y, 0.05, cfg));
}
BENCHMARK(BM_TwoSampleTest)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_IndicatorNull(benchmark::State& state) {
  const auto f = DistributionSpec::standard_normal(2);
  for (auto _ : state) {
    RngStream rng(4, 0);
    benchmark::DoNotOptimize(ks_cvm_null(BaselineKind::KS, f, state.range(0), 1000, rng));
  }
}
BENCHMARK(BM_IndicatorNull)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
