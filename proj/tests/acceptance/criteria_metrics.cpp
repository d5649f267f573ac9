#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "criteria.hpp"
#include "vcae/metrics.hpp"
#include "vcae/rng.hpp"
#include "vcae/vine.hpp"

namespace acceptance {

namespace {

using namespace vcae;

long resident_bytes() {
  std::ifstream in("/proc/self/statm");
  long total = 0, resident = 0;
  in >> total >> resident;
  return resident * sysconf(_SC_PAGESIZE);
}

// Samples the resident set while a workload runs and reports the peak.
class RssWatcher {
 public:
  RssWatcher() : baseline_(resident_bytes()), peak_(baseline_), run_(true) {
    thread_ = std::thread([this] {
      while (run_.load()) {
        const long now = resident_bytes();
        long prev = peak_.load();
        while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
    });
  }
  ~RssWatcher() {
    if (thread_.joinable()) {
      run_.store(false);
      thread_.join();
    }
  }
  long peak_above_baseline() {
    run_.store(false);
    thread_.join();
    const long final_now = resident_bytes();
    return std::max(peak_.load(), final_now) - baseline_;
  }

 private:
  long baseline_;
  std::atomic<long> peak_;
  std::atomic<bool> run_;
  std::thread thread_;
};

// Hand-assembled 5-dimensional vine: pair densities are cheap closed forms,
// marginals come from a seeded normal sample.
LatentDensity five_dim_vine() {
  DVineModel vine;
  const std::size_t n = 5;
  Rng rng(99);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> values(500);
    for (double& v : values) v = rng.normal();
    vine.marginals.emplace_back(std::move(values), 64);
  }
  vine.order = {0, 1, 2, 3, 4};
  vine.trees.resize(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t e = 0; e < n - 1 - t; ++e) {
      BivariateCopula c;
      c.family = Family::kClayton;
      c.theta = 1.5 / static_cast<double>(t + 1);
      vine.trees[t].push_back(c);
    }
  }
  return LatentDensity{vine};
}

LatentDensity gaussian_product_vine(std::size_t rows, double shift, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, 2);
  for (std::size_t i = 0; i < rows; ++i) {
    m(i, 0) = rng.normal() + shift;
    m(i, 1) = rng.normal();
  }
  return LatentDensity{fit_dvine(m, OrderStrategy::kIdentity)};
}

}  // namespace

bool criterion7_streaming_memory(bool full_scale) {
  const LatentDensity density = five_dim_vine();
  const std::size_t k = full_scale ? 50 : 20;

  GridSpec grid;
  grid.points_per_dim = k;
  grid.scale = Scale::kCopula;

  const auto t0 = std::chrono::steady_clock::now();
  RssWatcher watcher;
  const DistributionSummary summary = entropy_grid(density, grid);
  const long peak = watcher.peak_above_baseline();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double cells = std::pow(static_cast<double>(k), 5.0);
  std::printf("  K=%zu (%.3g cells): normalized entropy %.6f, %.1f s, peak extra memory %.1f MB\n",
              k, cells, *summary.normalized_entropy, secs, peak / 1048576.0);

  bool pass = peak < 100 * 1048576L;
  const double limit = full_scale ? 1800.0 : 60.0;
  std::printf("  runtime limit %s: %.0f s\n", full_scale ? "(full scale)" : "(CI scale)", limit);
  pass = pass && secs < limit;

  if (!full_scale) {
    // the serial streaming API agrees with the parallel reduction bit for bit
    GridSpec small = grid;
    small.points_per_dim = 8;
    double h_stream = 0.0;
    grid_masses(density, small, [&](std::uint64_t, double mass) {
      if (mass > 0.0) h_stream -= mass * std::log(mass);
    });
    const DistributionSummary via_reduce = entropy_grid(density, small);
    const double diff = std::fabs(h_stream - via_reduce.raw_entropy);
    std::printf("  serial grid_masses vs parallel entropy at K=8: |diff| = %.3e\n", diff);
    pass = pass && diff <= 1e-9;
  }
  return pass;
}

bool criterion8_metric_identities() {
  bool pass = true;

  // KL(P||P) = 0
  {
    const LatentDensity p = gaussian_product_vine(2000, 0.0, 5);
    GridSpec grid;
    grid.points_per_dim = 15;
    grid.scale = Scale::kCopula;
    const double kl = kl_divergence_grid(p, p, grid);
    std::printf("  KL(P||P) grid: %.3e (limit 1e-9)\n", kl);
    pass = pass && std::fabs(kl) <= 1e-9;
  }

  // uniform masses -> normalized entropy exactly 1
  {
    Rng rng(6);
    Matrix m(1000, 2);
    for (double& v : m.data()) v = rng.normal();
    const LatentDensity indep{fit_dvine(m, OrderStrategy::kIdentity)};
    if (indep.vine.trees[0][0].family != Family::kIndependence) {
      std::printf("  setup: expected an independence fit\n");
      return false;
    }
    GridSpec grid;
    grid.points_per_dim = 10;
    grid.scale = Scale::kCopula;
    const double h = *entropy_grid(indep, grid).normalized_entropy;
    std::printf("  uniform-mass normalized entropy: %.12f (limit |1-h| <= 1e-9)\n", h);
    pass = pass && std::fabs(h - 1.0) <= 1e-9;
  }

  // Gaussian mean shift: KL approx delta^2/2 via MC with g=20000
  {
    const double delta = 1.0;
    const LatentDensity p = gaussian_product_vine(50000, 0.0, 7);
    const LatentDensity q = gaussian_product_vine(50000, delta, 8);
    const double kl = kl_divergence_mc(p, q, 20000, Scale::kLatent, 9);
    const double want = delta * delta / 2.0;
    const double rel = std::fabs(kl - want) / want;
    std::printf("  mean-shift KL: %.4f vs closed form %.4f (rel %.1f%%, limit 15%%)\n", kl, want,
                100.0 * rel);
    pass = pass && rel <= 0.15;
  }
  return pass;
}

}  // namespace acceptance
