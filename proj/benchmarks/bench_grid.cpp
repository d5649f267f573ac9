#include <benchmark/benchmark.h>

#include "vcae/metrics.hpp"
#include "vcae/rng.hpp"
#include "vcae/vine.hpp"

namespace {

using namespace vcae;

LatentDensity small_vine(std::size_t dims) {
  Rng rng(7);
  Matrix m(800, dims);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double shared = rng.normal();
    for (std::size_t j = 0; j < dims; ++j) m(i, j) = 0.7 * shared + 0.7 * rng.normal();
  }
  return LatentDensity{fit_dvine(m, OrderStrategy::kIdentity)};
}

void BM_GridEntropy(benchmark::State& state) {
  const LatentDensity d = small_vine(3);
  GridSpec grid;
  grid.points_per_dim = static_cast<std::size_t>(state.range(0));
  grid.scale = Scale::kCopula;
  for (auto _ : state) {
    benchmark::DoNotOptimize(entropy_grid(d, grid));
  }
}
BENCHMARK(BM_GridEntropy)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_McEntropy(benchmark::State& state) {
  const LatentDensity d = small_vine(5);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        entropy_mc(d, static_cast<std::size_t>(state.range(0)), Scale::kLatent, ++seed));
  }
}
BENCHMARK(BM_McEntropy)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
