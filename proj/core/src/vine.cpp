#include "vcae/vine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "vcae/error.hpp"
#include "vcae/rng.hpp"

namespace vcae {

namespace {

constexpr double kUvMin = 1e-10;
constexpr double kUvMax = 1.0 - 1e-10;
constexpr double kDensityFloor = 1e-300;

double clamp_uv(double u) { return std::clamp(u, kUvMin, kUvMax); }

std::vector<std::size_t> greedy_tau_order(const std::vector<std::vector<double>>& pseudo) {
  const std::size_t n = pseudo.size();
  const std::size_t count = pseudo[0].size();

  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  UVPairs pairs(count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < count; ++k) pairs[k] = {pseudo[i][k], pseudo[j][k]};
      w[i][j] = w[j][i] = std::fabs(empirical_tau(pairs));
    }
  }

  // seed with the strongest pair, then extend whichever path end gains most
  std::size_t bi = 0, bj = 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (w[i][j] > w[bi][bj]) {
        bi = i;
        bj = j;
      }
    }
  }
  std::vector<std::size_t> path = {bi, bj};
  std::vector<bool> used(n, false);
  used[bi] = used[bj] = true;
  while (path.size() < n) {
    const std::size_t front = path.front(), back = path.back();
    double best_w = -1.0;
    std::size_t best_k = 0;
    bool at_front = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (used[k]) continue;
      if (w[front][k] > best_w) {
        best_w = w[front][k];
        best_k = k;
        at_front = true;
      }
      if (w[back][k] > best_w) {
        best_w = w[back][k];
        best_k = k;
        at_front = false;
      }
    }
    used[best_k] = true;
    if (at_front) {
      path.insert(path.begin(), best_k);
    } else {
      path.push_back(best_k);
    }
  }
  return path;
}

}  // namespace

EmpiricalMarginal::EmpiricalMarginal(std::vector<double> values, std::size_t bins)
    : values_(std::move(values)), bins_(bins) {
  if (values_.size() < 20) {
    throw NumericError("EmpiricalMarginal: need at least 20 samples, got " +
                       std::to_string(values_.size()));
  }
  if (bins_ < 2) throw DomainError("EmpiricalMarginal: bins must be >= 2");
  std::sort(values_.begin(), values_.end());
  const double lo = values_.front(), hi = values_.back();
  if (!(hi > lo)) {
    throw NumericError("EmpiricalMarginal: sample has zero variance");
  }
  bin_width_ = (hi - lo) / static_cast<double>(bins_);
  counts_.assign(bins_, 0.0);
  for (double v : values_) {
    auto b = static_cast<std::size_t>((v - lo) / bin_width_);
    if (b >= bins_) b = bins_ - 1;
    counts_[b] += 1.0;
  }
}

double EmpiricalMarginal::ecdf(double x) const {
  const auto n = static_cast<double>(values_.size());
  const auto rank = static_cast<double>(
      std::upper_bound(values_.begin(), values_.end(), x) - values_.begin());
  return std::max(rank, 1.0) / (n + 1.0);
}

double EmpiricalMarginal::quantile(double u) const {
  const std::size_t n = values_.size();
  const double pos = u * static_cast<double>(n + 1);
  if (pos <= 1.0) return values_.front();
  if (pos >= static_cast<double>(n)) return values_.back();
  const auto k = static_cast<std::size_t>(pos);  // 1-based order statistic index
  const double frac = pos - static_cast<double>(k);
  return values_[k - 1] + frac * (values_[k] - values_[k - 1]);
}

double EmpiricalMarginal::density(double x) const {
  const double lo = values_.front(), hi = values_.back();
  if (x < lo || x > hi) return 0.0;
  auto b = static_cast<std::size_t>((x - lo) / bin_width_);
  if (b >= bins_) b = bins_ - 1;
  return (counts_[b] + 1.0) /
         ((static_cast<double>(values_.size()) + static_cast<double>(bins_)) * bin_width_);
}

double EmpiricalMarginal::log_density(double x) const {
  return std::log(std::max(density(x), kDensityFloor));
}

std::size_t DVineModel::edge_count() const {
  std::size_t total = 0;
  for (const auto& tree : trees) total += tree.size();
  return total;
}

double DVineModel::copula_log_density(std::span<const double> u) const {
  const std::size_t n = dim();
  if (u.size() != n) {
    throw ShapeError("copula_log_density: point has " + std::to_string(u.size()) +
                     " dims, vine has " + std::to_string(n));
  }
  if (n < 2) return 0.0;

  thread_local std::vector<double> a, b, a_next, b_next;
  a.resize(n - 1);
  b.resize(n - 1);
  for (std::size_t e = 0; e + 1 < n; ++e) {
    a[e] = clamp_uv(u[order[e]]);
    b[e] = clamp_uv(u[order[e + 1]]);
  }

  double lp = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const std::size_t edges = n - 1 - t;
    for (std::size_t e = 0; e < edges; ++e) {
      lp += log_pdf(trees[t][e], a[e], b[e]);
    }
    if (t + 2 == n) break;
    a_next.resize(edges - 1);
    b_next.resize(edges - 1);
    for (std::size_t e = 0; e + 1 < edges; ++e) {
      a_next[e] = clamp_uv(hfunc2(trees[t][e], a[e], b[e]));
      b_next[e] = clamp_uv(hfunc1(trees[t][e + 1], a[e + 1], b[e + 1]));
    }
    std::swap(a, a_next);
    std::swap(b, b_next);
  }
  return lp;
}

double DVineModel::log_density(std::span<const double> h) const {
  const std::size_t n = dim();
  if (h.size() != n) {
    throw ShapeError("log_density: point has " + std::to_string(h.size()) + " dims, vine has " +
                     std::to_string(n));
  }
  thread_local std::vector<double> u;
  u.resize(n);
  double lp = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    lp += marginals[k].log_density(h[k]);
    u[k] = marginals[k].ecdf(h[k]);
  }
  return lp + copula_log_density(u);
}

Matrix DVineModel::sample_uniform(std::size_t g, std::uint64_t seed) const {
  const std::size_t n = dim();
  Rng rng(seed);
  Matrix out(g, n);

  std::vector<double> cond(n);   // cond[k] = F(x_k | x_{k+1..i}) after step i
  std::vector<double> chain(n + 1);
  for (std::size_t s = 0; s < g; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = rng.uniform01();
      if (i == 0) {
        cond[0] = w;
        out(s, order[0]) = w;
        continue;
      }
      // invert F(x_i | x_0..x_{i-1}) = w down the conditioning chain;
      // chain[j] holds F(x_i | x_j..x_{i-1})
      chain[0] = w;
      for (std::size_t j = 0; j < i; ++j) {
        // edge (j, i | j+1..i-1): tree i-j-1, edge j
        chain[j + 1] = hinv1(trees[i - j - 1][j], cond[j], chain[j]);
      }
      const double ui = clamp_uv(chain[i]);
      out(s, order[i]) = ui;

      // refresh cond for the next variable
      for (std::size_t k = 0; k < i; ++k) {
        cond[k] = clamp_uv(hfunc2(trees[i - k - 1][k], cond[k], clamp_uv(chain[k + 1])));
      }
      cond[i] = ui;
    }
  }
  return out;
}

Matrix DVineModel::sample(std::size_t g, std::uint64_t seed) const {
  Matrix u = sample_uniform(g, seed);
  for (std::size_t s = 0; s < u.rows(); ++s) {
    for (std::size_t k = 0; k < u.cols(); ++k) {
      u(s, k) = marginals[k].quantile(u(s, k));
    }
  }
  return u;
}

DVineModel fit_dvine(const Matrix& latent, OrderStrategy strategy,
                     std::vector<std::size_t> given_order, std::size_t bins) {
  const std::size_t n = latent.cols();
  const std::size_t count = latent.rows();
  if (n < 2) throw DomainError("fit_dvine: need at least 2 dimensions");

  DVineModel model;
  model.marginals.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> col(count);
    for (std::size_t i = 0; i < count; ++i) col[i] = latent(i, k);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    if (!(*mx > *mn)) {
      throw NumericError("fit_dvine: latent dimension " + std::to_string(k) +
                         " has zero variance");
    }
    model.marginals.emplace_back(std::move(col), bins);
  }

  // pseudo-observations per original dim
  std::vector<std::vector<double>> pseudo(n, std::vector<double>(count));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < count; ++i) {
      pseudo[k][i] = model.marginals[k].ecdf(latent(i, k));
    }
  }

  switch (strategy) {
    case OrderStrategy::kIdentity:
      model.order.resize(n);
      std::iota(model.order.begin(), model.order.end(), 0);
      break;
    case OrderStrategy::kGiven: {
      if (given_order.size() != n) {
        throw DomainError("fit_dvine: given order has wrong length");
      }
      std::vector<bool> seen(n, false);
      for (std::size_t k : given_order) {
        if (k >= n || seen[k]) throw DomainError("fit_dvine: order is not a permutation");
        seen[k] = true;
      }
      model.order = std::move(given_order);
      break;
    }
    case OrderStrategy::kGreedyTau:
      model.order = greedy_tau_order(pseudo);
      break;
  }

  // level arrays, O(N*n) held at once
  std::vector<std::vector<double>> a(n - 1), b(n - 1);
  for (std::size_t e = 0; e + 1 < n; ++e) {
    a[e] = pseudo[model.order[e]];
    b[e] = pseudo[model.order[e + 1]];
  }

  model.trees.resize(n - 1);
  UVPairs pairs(count);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const std::size_t edges = n - 1 - t;
    model.trees[t].resize(edges);
    for (std::size_t e = 0; e < edges; ++e) {
      for (std::size_t i = 0; i < count; ++i) pairs[i] = {a[e][i], b[e][i]};
      model.trees[t][e] = select_family(pairs).copula;
    }
    if (t + 2 == n) break;
    for (std::size_t e = 0; e + 1 < edges; ++e) {
      const auto& ce = model.trees[t][e];
      const auto& cn = model.trees[t][e + 1];
      for (std::size_t i = 0; i < count; ++i) {
        a[e][i] = clamp_uv(hfunc2(ce, a[e][i], b[e][i]));
        b[e][i] = clamp_uv(hfunc1(cn, a[e + 1][i], b[e + 1][i]));
      }
    }
    a.resize(edges - 1);
    b.resize(edges - 1);
  }
  return model;
}

void save_vine(const DVineModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("vine file: cannot write " + path.string());
  const std::size_t n = model.dim();
  out << "VCAEVINE 1\n";
  out << "n " << n << "\n";
  out << "N " << model.sample_count() << "\n";
  out << "bins " << model.marginals[0].bins() << "\n";
  out << "order";
  for (std::size_t k : model.order) out << ' ' << k;
  out << "\n";
  char buf[40];
  for (std::size_t k = 0; k < n; ++k) {
    out << "marginal " << k << "\n";
    for (double v : model.marginals[k].values()) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << "\n";
    }
  }
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (std::size_t e = 0; e < model.trees[t].size(); ++e) {
      out << "copula " << t << " " << e << " " << copula_record(model.trees[t][e]) << "\n";
    }
  }
  out << "end\n";
  if (!out) throw FormatError("vine file: write failed for " + path.string());
}

DVineModel load_vine(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("vine file: cannot open " + path.string());

  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "VCAEVINE") {
    throw FormatError("vine file: bad header in " + path.string());
  }
  if (version != 1) {
    throw FormatError("vine file: unsupported version " + std::to_string(version));
  }

  std::size_t n = 0, count = 0, bins = 0;
  auto expect = [&](const char* key) {
    if (!(in >> word) || word != key) {
      throw FormatError(std::string("vine file: expected '") + key + "'");
    }
  };
  expect("n");
  if (!(in >> n) || n < 2) throw FormatError("vine file: invalid dimension count");
  expect("N");
  if (!(in >> count) || count < 20) throw FormatError("vine file: invalid sample count");
  expect("bins");
  if (!(in >> bins) || bins < 2) throw FormatError("vine file: invalid bin count");
  expect("order");

  DVineModel model;
  model.order.resize(n);
  std::vector<bool> seen(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(in >> model.order[k]) || model.order[k] >= n || seen[model.order[k]]) {
      throw FormatError("vine file: order is not a permutation of 0.." + std::to_string(n - 1));
    }
    seen[model.order[k]] = true;
  }

  model.marginals.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    expect("marginal");
    std::size_t idx = 0;
    if (!(in >> idx) || idx != k) throw FormatError("vine file: marginal blocks out of order");
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> values[i])) {
        throw FormatError("vine file: truncated marginal " + std::to_string(k));
      }
    }
    model.marginals.emplace_back(std::move(values), bins);
  }

  model.trees.resize(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) model.trees[t].resize(n - 1 - t);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t e = 0; e < n - 1 - t; ++e) {
      expect("copula");
      std::size_t rt = 0, re = 0;
      if (!(in >> rt >> re) || rt != t || re != e) {
        throw FormatError("vine file: copula records out of order");
      }
      std::string rest;
      std::getline(in, rest);
      model.trees[t][e] = parse_copula_record(rest);
    }
  }
  expect("end");
  return model;
}

}  // namespace vcae
