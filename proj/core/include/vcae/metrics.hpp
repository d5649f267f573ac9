#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vcae/matrix.hpp"
#include "vcae/vine.hpp"

namespace vcae {

// Copula scale evaluates on [0,1]^n (pseudo-coordinates, the default);
// latent scale evaluates the full density over a bounding box in R^n.
enum class Scale { kCopula, kLatent };

std::string scale_name(Scale s);

// Implicit K^n grid. Cells are never materialized: evaluation streams with
// O(K*n) memory regardless of n.
struct GridSpec {
  std::size_t points_per_dim = 20;
  Scale scale = Scale::kCopula;
  // per-dimension bounds for the latent scale; empty means "marginal ranges"
  std::vector<std::pair<double, double>> domain;

  void validate() const;
};

struct DistributionSummary {
  double raw_entropy = 0.0;                   // nats
  std::optional<double> normalized_entropy;   // raw / ln(cell count), grid only
  std::string estimator;                      // "grid" or "monte_carlo"
  Scale scale = Scale::kCopula;
  std::size_t points_per_dim = 0;             // grid estimator
  std::size_t sample_count = 0;               // MC estimator
  std::uint64_t seed = 0;
};

// Streams (cell index, probability mass) in ascending cell order. Two passes:
// the first accumulates the normalizer, the second emits normalized masses.
// Throws NumericError if the density is zero over the whole grid.
void grid_masses(const LatentDensity& density, const GridSpec& grid,
                 const std::function<void(std::uint64_t, double)>& sink);

// Shannon entropy of the streamed grid masses, normalized by ln(K^n).
DistributionSummary entropy_grid(const LatentDensity& density, const GridSpec& grid);

// Monte-Carlo differential entropy: -(1/g) sum log f(h_i), h_i ~ density.
DistributionSummary entropy_mc(const LatentDensity& density, std::size_t samples, Scale scale,
                               std::uint64_t seed);

// Discrete KL over a shared grid with mass floor 1e-12 on Q; clamped at 0.
double kl_divergence_grid(const LatentDensity& p, const LatentDensity& q, const GridSpec& grid);

// (1/g) sum log(p/q) under samples from P, density floor 1e-12 on q.
double kl_divergence_mc(const LatentDensity& p, const LatentDensity& q, std::size_t samples,
                        Scale scale, std::uint64_t seed);

// One KxK CSV per dimension pair (tree-adjacent pairs evaluated exactly,
// the rest by Monte-Carlo marginalization) plus one histogram CSV per
// dimension. Returns the list of files written.
std::vector<std::filesystem::path> pairwise_density_export(const LatentDensity& density,
                                                           std::size_t k,
                                                           const std::filesystem::path& dir,
                                                           Scale scale, std::size_t mc_samples,
                                                           std::uint64_t seed);

// Mean intensity of decoded pixels inside the mask minus the same mean over
// the reference rows. Positive values flag trigger emergence.
double fingerprint_score(const Matrix& decoded, const std::vector<bool>& mask,
                         const Matrix& reference);

}  // namespace vcae
