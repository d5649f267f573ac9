#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vcae/copula.hpp"
#include "vcae/matrix.hpp"

namespace vcae {

// Empirical marginal of one latent dimension: rank-based CDF, interpolated
// quantiles, and a smoothed histogram density for log-density evaluation.
class EmpiricalMarginal {
 public:
  EmpiricalMarginal() = default;
  EmpiricalMarginal(std::vector<double> values, std::size_t bins);

  // rank(x)/(n+1), strictly inside (0,1); values below the minimum get 1/(n+1).
  double ecdf(double x) const;

  // Linear interpolation between order statistics at position u*(n+1),
  // clamped to the sample range.
  double quantile(double u) const;

  // Histogram density with add-one smoothing; zero outside the sample range.
  double density(double x) const;
  double log_density(double x) const;  // floored, never -inf

  std::size_t size() const { return values_.size(); }
  std::size_t bins() const { return bins_; }
  const std::vector<double>& values() const { return values_; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  std::vector<double> values_;  // sorted ascending
  std::vector<double> counts_;
  std::size_t bins_ = 64;
  double bin_width_ = 0.0;
};

enum class OrderStrategy { kIdentity, kGiven, kGreedyTau };

// D-vine over n variables: tree t (0-based) holds n-1-t pair copulas; edge e
// of tree t couples ordered variables (e, e+t+1) given those between.
struct DVineModel {
  std::vector<std::size_t> order;                 // vine position -> original dim
  std::vector<std::vector<BivariateCopula>> trees;
  std::vector<EmpiricalMarginal> marginals;       // indexed by original dim

  std::size_t dim() const { return order.size(); }
  std::size_t sample_count() const { return marginals.empty() ? 0 : marginals[0].size(); }
  std::size_t edge_count() const;

  // Joint log density at a latent point (original dim indexing): sum of
  // histogram marginal log densities plus pair-copula log densities at the
  // recursively built conditional arguments.
  double log_density(std::span<const double> h) const;

  // Copula part only, at pseudo-coordinates u (original dim indexing).
  double copula_log_density(std::span<const double> u) const;

  // Inverse-Rosenblatt sampling; rows are latent points in original indexing.
  Matrix sample(std::size_t g, std::uint64_t seed) const;
  // Same draws kept on the copula scale.
  Matrix sample_uniform(std::size_t g, std::uint64_t seed) const;
};

// Sequential tree-by-tree fit with per-edge family selection. `given_order`
// applies only to OrderStrategy::kGiven.
DVineModel fit_dvine(const Matrix& latent, OrderStrategy strategy,
                     std::vector<std::size_t> given_order = {}, std::size_t bins = 64);

void save_vine(const DVineModel& model, const std::filesystem::path& path);
DVineModel load_vine(const std::filesystem::path& path);

// An evaluable joint density over the latent space with a sampler attached.
struct LatentDensity {
  DVineModel vine;

  std::size_t dim() const { return vine.dim(); }
  double log_density(std::span<const double> h) const { return vine.log_density(h); }
  double copula_log_density(std::span<const double> u) const {
    return vine.copula_log_density(u);
  }
  Matrix sample(std::size_t g, std::uint64_t seed) const { return vine.sample(g, seed); }
  Matrix sample_uniform(std::size_t g, std::uint64_t seed) const {
    return vine.sample_uniform(g, seed);
  }
};

}  // namespace vcae
