#include "vcae/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "vcae/error.hpp"
#include "vcae/parallel.hpp"
#include "vcae/rng.hpp"

namespace vcae {

namespace {

constexpr double kMassFloor = 1e-12;

struct Kahan {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Resolved geometry of an implicit grid: per-dimension cell centers and the
// shared cell volume. Storage is O(K*n).
struct GridGeometry {
  std::size_t k = 0;
  std::size_t n = 0;
  std::vector<std::vector<double>> centers;  // [dim][i]
  double cell_volume = 1.0;

  std::uint64_t cell_count() const {
    std::uint64_t c = 1;
    for (std::size_t d = 0; d < n; ++d) c *= k;
    return c;
  }
};

GridGeometry make_geometry(const LatentDensity& density, const GridSpec& grid,
                           const std::vector<std::pair<double, double>>* shared_domain) {
  grid.validate();
  GridGeometry g;
  g.k = grid.points_per_dim;
  g.n = density.dim();
  g.centers.resize(g.n);
  for (std::size_t d = 0; d < g.n; ++d) {
    double lo = 0.0, hi = 1.0;
    if (grid.scale == Scale::kLatent) {
      if (shared_domain) {
        lo = (*shared_domain)[d].first;
        hi = (*shared_domain)[d].second;
      } else if (!grid.domain.empty()) {
        lo = grid.domain[d].first;
        hi = grid.domain[d].second;
      } else {
        lo = density.vine.marginals[d].min();
        hi = density.vine.marginals[d].max();
      }
      if (!(hi > lo)) throw DomainError("grid: empty domain in dimension " + std::to_string(d));
    }
    const double step = (hi - lo) / static_cast<double>(g.k);
    g.cell_volume *= step;
    g.centers[d].resize(g.k);
    for (std::size_t i = 0; i < g.k; ++i) {
      g.centers[d][i] = lo + (static_cast<double>(i) + 0.5) * step;
    }
  }
  return g;
}

double cell_mass(const LatentDensity& density, const GridGeometry& g, Scale scale,
                 std::vector<double>& point, const std::vector<std::size_t>& idx) {
  for (std::size_t d = 0; d < g.n; ++d) point[d] = g.centers[d][idx[d]];
  const double ld = (scale == Scale::kCopula) ? density.copula_log_density(point)
                                              : density.log_density(point);
  return std::exp(ld) * g.cell_volume;
}

// Visits every cell of one slice (fixed first-dimension index) in ascending
// order. visit(linear_index, idx).
template <typename Visit>
void walk_slice(const GridGeometry& g, std::size_t slice, Visit&& visit) {
  std::vector<std::size_t> idx(g.n, 0);
  idx[0] = slice;
  std::uint64_t cells_per_slice = 1;
  for (std::size_t d = 1; d < g.n; ++d) cells_per_slice *= g.k;
  std::uint64_t linear = static_cast<std::uint64_t>(slice) * cells_per_slice;
  for (std::uint64_t c = 0; c < cells_per_slice; ++c, ++linear) {
    visit(linear, idx);
    for (std::size_t d = g.n; d-- > 1;) {
      if (++idx[d] < g.k) break;
      idx[d] = 0;
    }
  }
}

// Parallel streaming reduction: per_cell returns this cell's contribution,
// per-slice partials are merged in slice order so the result is independent
// of the thread count.
template <typename PerCell>
double reduce_cells(const GridGeometry& g, PerCell&& per_cell) {
  const std::size_t k = g.k;
  const std::size_t workers = std::min(thread_count(), k);
  std::vector<double> slice_sum(k, 0.0);

  auto run = [&](std::size_t worker) {
    std::vector<double> point(g.n);
    std::vector<std::size_t> scratch_idx;
    for (std::size_t s = worker; s < k; s += workers) {
      Kahan acc;
      walk_slice(g, s, [&](std::uint64_t, const std::vector<std::size_t>& idx) {
        acc.add(per_cell(point, idx));
      });
      slice_sum[s] = acc.sum;
    }
  };

  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }

  Kahan total;
  for (std::size_t s = 0; s < k; ++s) total.add(slice_sum[s]);
  return total.sum;
}

std::vector<std::pair<double, double>> shared_latent_domain(const LatentDensity& p,
                                                            const LatentDensity& q,
                                                            const GridSpec& grid) {
  std::vector<std::pair<double, double>> dom(p.dim());
  for (std::size_t d = 0; d < p.dim(); ++d) {
    if (!grid.domain.empty()) {
      dom[d] = grid.domain[d];
    } else {
      dom[d] = {std::min(p.vine.marginals[d].min(), q.vine.marginals[d].min()),
                std::max(p.vine.marginals[d].max(), q.vine.marginals[d].max())};
    }
  }
  return dom;
}

void write_csv_header(std::ofstream& out, Scale scale, std::size_t i, std::size_t j) {
  if (scale == Scale::kCopula) {
    out << "u1,u2,density\n";
  } else {
    out << "h_" << i << ",h_" << j << ",density\n";
  }
}

}  // namespace

std::string scale_name(Scale s) { return s == Scale::kCopula ? "copula" : "latent"; }

void GridSpec::validate() const {
  if (points_per_dim < 2) throw DomainError("GridSpec: points_per_dim must be >= 2");
}

void grid_masses(const LatentDensity& density, const GridSpec& grid,
                 const std::function<void(std::uint64_t, double)>& sink) {
  const GridGeometry g = make_geometry(density, grid, nullptr);

  // pass 1: normalizer
  const double total = reduce_cells(
      g, [&](std::vector<double>& point, const std::vector<std::size_t>& idx) {
        return cell_mass(density, g, grid.scale, point, idx);
      });
  if (!(total > 0.0)) {
    throw NumericError("grid_masses: density is zero over the entire grid");
  }

  // pass 2: emit normalized masses in cell order
  std::vector<double> point(g.n);
  for (std::size_t s = 0; s < g.k; ++s) {
    walk_slice(g, s, [&](std::uint64_t linear, const std::vector<std::size_t>& idx) {
      sink(linear, cell_mass(density, g, grid.scale, point, idx) / total);
    });
  }
}

DistributionSummary entropy_grid(const LatentDensity& density, const GridSpec& grid) {
  const GridGeometry g = make_geometry(density, grid, nullptr);

  const double total = reduce_cells(
      g, [&](std::vector<double>& point, const std::vector<std::size_t>& idx) {
        return cell_mass(density, g, grid.scale, point, idx);
      });
  if (!(total > 0.0)) {
    throw NumericError("entropy_grid: density is zero over the entire grid");
  }

  const double h = reduce_cells(
      g, [&](std::vector<double>& point, const std::vector<std::size_t>& idx) {
        const double p = cell_mass(density, g, grid.scale, point, idx) / total;
        return p > 0.0 ? -p * std::log(p) : 0.0;
      });

  DistributionSummary summary;
  summary.raw_entropy = h;
  summary.normalized_entropy =
      h / (static_cast<double>(density.dim()) * std::log(static_cast<double>(g.k)));
  summary.estimator = "grid";
  summary.scale = grid.scale;
  summary.points_per_dim = g.k;
  return summary;
}

DistributionSummary entropy_mc(const LatentDensity& density, std::size_t samples, Scale scale,
                               std::uint64_t seed) {
  if (samples == 0) throw DomainError("entropy_mc: need at least one sample");
  const Matrix draws =
      (scale == Scale::kCopula) ? density.sample_uniform(samples, seed) : density.sample(samples, seed);
  Kahan acc;
  for (std::size_t i = 0; i < draws.rows(); ++i) {
    const auto row = draws.row(i);
    const double ld = (scale == Scale::kCopula) ? density.copula_log_density(row)
                                                : density.log_density(row);
    acc.add(-ld);
  }
  DistributionSummary summary;
  summary.raw_entropy = acc.sum / static_cast<double>(samples);
  summary.estimator = "monte_carlo";
  summary.scale = scale;
  summary.sample_count = samples;
  summary.seed = seed;
  return summary;
}

double kl_divergence_grid(const LatentDensity& p, const LatentDensity& q, const GridSpec& grid) {
  if (p.dim() != q.dim()) {
    throw ShapeError("kl_divergence_grid: dimension mismatch " + std::to_string(p.dim()) +
                     " vs " + std::to_string(q.dim()));
  }
  std::vector<std::pair<double, double>> dom;
  const std::vector<std::pair<double, double>>* dom_ptr = nullptr;
  if (grid.scale == Scale::kLatent) {
    dom = shared_latent_domain(p, q, grid);
    dom_ptr = &dom;
  }
  const GridGeometry g = make_geometry(p, grid, dom_ptr);

  const double zp = reduce_cells(
      g, [&](std::vector<double>& point, const std::vector<std::size_t>& idx) {
        return cell_mass(p, g, grid.scale, point, idx);
      });
  const double zq = reduce_cells(
      g, [&](std::vector<double>& point, const std::vector<std::size_t>& idx) {
        return cell_mass(q, g, grid.scale, point, idx);
      });
  if (!(zp > 0.0) || !(zq > 0.0)) {
    throw NumericError("kl_divergence_grid: density is zero over the entire grid");
  }

  const double kl = reduce_cells(
      g, [&](std::vector<double>& point, const std::vector<std::size_t>& idx) {
        const double pm = cell_mass(p, g, grid.scale, point, idx) / zp;
        if (pm <= 0.0) return 0.0;
        const double qm = std::max(cell_mass(q, g, grid.scale, point, idx) / zq, kMassFloor);
        return pm * std::log(pm / qm);
      });
  return std::max(kl, 0.0);
}

double kl_divergence_mc(const LatentDensity& p, const LatentDensity& q, std::size_t samples,
                        Scale scale, std::uint64_t seed) {
  if (p.dim() != q.dim()) {
    throw ShapeError("kl_divergence_mc: dimension mismatch");
  }
  if (samples == 0) throw DomainError("kl_divergence_mc: need at least one sample");
  const Matrix draws =
      (scale == Scale::kCopula) ? p.sample_uniform(samples, seed) : p.sample(samples, seed);
  const double log_floor = std::log(kMassFloor);
  Kahan acc;
  for (std::size_t i = 0; i < draws.rows(); ++i) {
    const auto row = draws.row(i);
    double lp, lq;
    if (scale == Scale::kCopula) {
      lp = p.copula_log_density(row);
      lq = q.copula_log_density(row);
    } else {
      lp = p.log_density(row);
      lq = q.log_density(row);
    }
    acc.add(lp - std::max(lq, log_floor));
  }
  return std::max(acc.sum / static_cast<double>(samples), 0.0);
}

std::vector<std::filesystem::path> pairwise_density_export(const LatentDensity& density,
                                                           std::size_t k,
                                                           const std::filesystem::path& dir,
                                                           Scale scale, std::size_t mc_samples,
                                                           std::uint64_t seed) {
  if (k < 2 || k > 200) throw DomainError("pairwise_density_export: K must lie in [2,200]");
  std::filesystem::create_directories(dir);
  const std::size_t n = density.dim();
  const auto& vine = density.vine;

  // vine position of each original dimension
  std::vector<std::size_t> position(n);
  for (std::size_t pos = 0; pos < n; ++pos) position[vine.order[pos]] = pos;

  std::vector<std::filesystem::path> written;
  char buf[64];

  Matrix draws;  // MC marginalization draws, shared across non-adjacent pairs
  bool have_draws = false;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::filesystem::path file =
          dir / ("pair_" + std::to_string(i) + "_" + std::to_string(j) + ".csv");
      std::ofstream out(file, std::ios::trunc);
      if (!out) throw FormatError("pairwise export: cannot write " + file.string());
      write_csv_header(out, scale, i, j);

      const std::size_t pi = position[i], pj = position[j];
      const bool adjacent = (pi + 1 == pj) || (pj + 1 == pi);

      // grid geometry for this pair
      double lo_i = 0.0, hi_i = 1.0, lo_j = 0.0, hi_j = 1.0;
      if (scale == Scale::kLatent) {
        lo_i = vine.marginals[i].min();
        hi_i = vine.marginals[i].max();
        lo_j = vine.marginals[j].min();
        hi_j = vine.marginals[j].max();
      }
      const double step_i = (hi_i - lo_i) / static_cast<double>(k);
      const double step_j = (hi_j - lo_j) / static_cast<double>(k);

      std::vector<double> grid_density(k * k, 0.0);
      if (adjacent) {
        const std::size_t e = std::min(pi, pj);
        const BivariateCopula& cop = vine.trees[0][e];
        const bool i_first = vine.order[e] == i;
        for (std::size_t a = 0; a < k; ++a) {
          const double xi = lo_i + (a + 0.5) * step_i;
          for (std::size_t b = 0; b < k; ++b) {
            const double xj = lo_j + (b + 0.5) * step_j;
            double ui = xi, uj = xj, fi = 1.0, fj = 1.0;
            if (scale == Scale::kLatent) {
              ui = vine.marginals[i].ecdf(xi);
              uj = vine.marginals[j].ecdf(xj);
              fi = vine.marginals[i].density(xi);
              fj = vine.marginals[j].density(xj);
            }
            const double c = i_first ? pdf(cop, ui, uj) : pdf(cop, uj, ui);
            grid_density[a * k + b] = c * fi * fj;
          }
        }
      } else {
        if (!have_draws) {
          draws = (scale == Scale::kCopula) ? vine.sample_uniform(mc_samples, seed)
                                            : vine.sample(mc_samples, seed);
          have_draws = true;
        }
        for (std::size_t s = 0; s < draws.rows(); ++s) {
          const double xi = draws(s, i), xj = draws(s, j);
          auto a = static_cast<long>((xi - lo_i) / step_i);
          auto b = static_cast<long>((xj - lo_j) / step_j);
          a = std::clamp<long>(a, 0, static_cast<long>(k) - 1);
          b = std::clamp<long>(b, 0, static_cast<long>(k) - 1);
          grid_density[a * k + b] += 1.0;
        }
        const double norm = static_cast<double>(mc_samples) * step_i * step_j;
        for (double& v : grid_density) v /= norm;
      }

      for (std::size_t a = 0; a < k; ++a) {
        const double xi = lo_i + (a + 0.5) * step_i;
        for (std::size_t b = 0; b < k; ++b) {
          const double xj = lo_j + (b + 0.5) * step_j;
          std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", xi, xj, grid_density[a * k + b]);
          out << buf;
        }
      }
      written.push_back(file);
    }
  }

  // 1-D marginal histograms (always on the latent scale)
  for (std::size_t d = 0; d < n; ++d) {
    const std::filesystem::path file = dir / ("marginal_" + std::to_string(d) + ".csv");
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw FormatError("pairwise export: cannot write " + file.string());
    out << "h,density\n";
    const auto& m = vine.marginals[d];
    const double lo = m.min(), step = (m.max() - m.min()) / static_cast<double>(m.bins());
    for (std::size_t b = 0; b < m.bins(); ++b) {
      const double x = lo + (b + 0.5) * step;
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", x, m.density(x));
      out << buf;
    }
    written.push_back(file);
  }
  return written;
}

double fingerprint_score(const Matrix& decoded, const std::vector<bool>& mask,
                         const Matrix& reference) {
  if (decoded.cols() != mask.size() || reference.cols() != mask.size()) {
    throw ShapeError("fingerprint_score: mask length " + std::to_string(mask.size()) +
                     " does not match image width");
  }
  if (decoded.rows() == 0 || reference.rows() == 0) {
    throw DomainError("fingerprint_score: empty image set");
  }
  std::size_t mask_count = 0;
  for (bool b : mask) mask_count += b ? 1 : 0;
  if (mask_count == 0) throw DomainError("fingerprint_score: empty trigger mask");

  auto mean_in_mask = [&](const Matrix& m) {
    Kahan acc;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto row = m.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (mask[j]) acc.add(row[j]);
      }
    }
    return acc.sum / static_cast<double>(m.rows() * mask_count);
  };
  return mean_in_mask(decoded) - mean_in_mask(reference);
}

}  // namespace vcae
