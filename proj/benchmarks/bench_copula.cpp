#include <benchmark/benchmark.h>

#include "vcae/copula.hpp"
#include "vcae/rng.hpp"

namespace {

using namespace vcae;

BivariateCopula config_for(int family) {
  BivariateCopula c;
  switch (family) {
    case 0:
      c.family = Family::kGaussian;
      c.theta = 0.5;
      break;
    case 1:
      c.family = Family::kStudentT;
      c.theta = 0.5;
      c.nu = 4.0;
      break;
    case 2:
      c.family = Family::kClayton;
      c.theta = 2.0;
      break;
    default:
      c.family = Family::kGumbel;
      c.theta = 1.8;
      break;
  }
  return c;
}

void BM_CopulaPdf(benchmark::State& state) {
  const BivariateCopula c = config_for(static_cast<int>(state.range(0)));
  Rng rng(1);
  UVPairs points;
  for (int i = 0; i < 1024; ++i) points.emplace_back(rng.uniform01(), rng.uniform01());
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [u, v] = points[i++ & 1023];
    benchmark::DoNotOptimize(pdf(c, u, v));
  }
}
BENCHMARK(BM_CopulaPdf)->Arg(0)->Arg(1)->Arg(2)->Arg(3);

void BM_CopulaHinv(benchmark::State& state) {
  const BivariateCopula c = config_for(static_cast<int>(state.range(0)));
  Rng rng(2);
  UVPairs points;
  for (int i = 0; i < 1024; ++i) points.emplace_back(rng.uniform01(), rng.uniform01());
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [u, p] = points[i++ & 1023];
    benchmark::DoNotOptimize(hinv1(c, u, p));
  }
}
BENCHMARK(BM_CopulaHinv)->Arg(0)->Arg(1)->Arg(2)->Arg(3);

void BM_FitMle(benchmark::State& state) {
  const UVPairs sample = sample_pair(config_for(2), 2000, 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_mle(Family::kClayton, 0, sample));
  }
}
BENCHMARK(BM_FitMle);

void BM_SelectFamily(benchmark::State& state) {
  const UVPairs sample = sample_pair(config_for(0), 2000, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_family(sample));
  }
}
BENCHMARK(BM_SelectFamily);

}  // namespace
