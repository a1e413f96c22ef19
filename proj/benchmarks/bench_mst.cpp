#include <benchmark/benchmark.h>

#include "spatialqq/baselines.hpp"

using namespace sqq;

namespace {

void BM_MstRunTest(benchmark::State& state) {
  const Index n = state.range(0), d = state.range(1);
  RngStream data(1, 0);
  const auto f = DistributionSpec::standard_normal(d);
  const auto x = sample(f, n, data), y = sample(f, n, data);
  for (auto _ : state) {
    RngStream rng(2, 0);
    benchmark::DoNotOptimize(mst_run_test(x, y, 0.05, 999, rng));
  }
}
BENCHMARK(BM_MstRunTest)->Args({50, 2})->Args({100, 5})->Args({100, 20})->Unit(benchmark::kMillisecond);

void BM_KsOneSample(benchmark::State& state) {
  RngStream data(3, 0);
  const auto f = DistributionSpec::standard_normal(2);
  const auto x = sample(f, state.range(0), data);
  const CdfEvaluator phi(f, ClosedCdf{});
  KsOptions opts;
  opts.exact_budget = state.range(1) ? 5e7 : 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(ks_statistic(x, phi, opts));
  state.SetLabel(state.range(1) ? "lattice" : "sample points");
}
BENCHMARK(BM_KsOneSample)->Args({100, 0})->Args({100, 1});

}  // namespace
