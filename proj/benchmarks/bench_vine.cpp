#include <benchmark/benchmark.h>

#include <cmath>

#include "vcae/rng.hpp"
#include "vcae/vine.hpp"

namespace {

using namespace vcae;

Matrix correlated_normals(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double shared = rng.normal();
    for (std::size_t j = 0; j < cols; ++j) {
      m(i, j) = std::sqrt(0.5) * shared + std::sqrt(0.5) * rng.normal();
    }
  }
  return m;
}

void BM_FitDvine(benchmark::State& state) {
  const Matrix h = correlated_normals(static_cast<std::size_t>(state.range(0)), 5, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_dvine(h, OrderStrategy::kIdentity));
  }
}
BENCHMARK(BM_FitDvine)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_VineLogDensity(benchmark::State& state) {
  const DVineModel vine = fit_dvine(correlated_normals(1000, 5, 4), OrderStrategy::kIdentity);
  Rng rng(5);
  std::vector<double> pt(5);
  for (auto _ : state) {
    for (std::size_t k = 0; k < 5; ++k) {
      pt[k] = rng.uniform(vine.marginals[k].min(), vine.marginals[k].max());
    }
    benchmark::DoNotOptimize(vine.log_density(pt));
  }
}
BENCHMARK(BM_VineLogDensity);

void BM_VineSample(benchmark::State& state) {
  const DVineModel vine = fit_dvine(correlated_normals(1000, 5, 6), OrderStrategy::kIdentity);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vine.sample(static_cast<std::size_t>(state.range(0)), ++seed));
  }
}
BENCHMARK(BM_VineSample)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace
