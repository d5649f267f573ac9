#include "vcae/copula.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include "vcae/brent.hpp"
#include "vcae/error.hpp"
#include "vcae/rng.hpp"
#include "vcae/special.hpp"

namespace vcae {

namespace {

constexpr double kUvMin = 1e-10;
constexpr double kUvMax = 1.0 - 1e-10;
constexpr double kRhoMax = 0.9999;
constexpr double kThetaMax = 20.0;
constexpr double kClaytonThetaMin = 1e-3;
constexpr std::array<double, 7> kNuGrid = {2, 3, 4, 6, 10, 20, 30};

double clamp_uv(double u) { return std::clamp(u, kUvMin, kUvMax); }

// ---- Gauss-Legendre nodes (64-point, computed once) -------------------------

struct GaussLegendre {
  std::array<double, 64> node, weight;
  GaussLegendre() {
    const int n = 64;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::fabs(z - z1) < 1e-15) break;
      }
      node[i] = -z;
      node[n - 1 - i] = z;
      weight[i] = 2.0 / ((1.0 - z * z) * pp * pp);
      weight[n - 1 - i] = weight[i];
    }
  }
};

const GaussLegendre& gl64() {
  static const GaussLegendre g;
  return g;
}

template <typename F>
double integrate_gl(F&& f, double a, double b) {
  const auto& g = gl64();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 64; ++i) {
    sum += g.weight[i] * f(mid + half * g.node[i]);
  }
  return sum * half;
}

// ---- base (unrotated) family evaluations ------------------------------------

double gaussian_log_pdf(double rho, double x, double y) {
  const double r2 = rho * rho;
  const double om = 1.0 - r2;
  return -0.5 * std::log(om) - (r2 * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * om);
}

double student_log_pdf(double rho, double nu, double x, double y) {
  const double om = 1.0 - rho * rho;
  const double q = (x * x - 2.0 * rho * x * y + y * y) / (nu * om);
  return std::lgamma(0.5 * (nu + 2.0)) + std::lgamma(0.5 * nu) -
         2.0 * std::lgamma(0.5 * (nu + 1.0)) - 0.5 * std::log(om) +
         0.5 * (nu + 1.0) * (std::log1p(x * x / nu) + std::log1p(y * y / nu)) -
         0.5 * (nu + 2.0) * std::log1p(q);
}

double clayton_log_pdf(double theta, double lu, double lv) {
  const double e1 = std::exp(-theta * lu);
  const double e2 = std::exp(-theta * lv);
  const double s = e1 + e2 - 1.0;
  if (!(s > 0.0)) return -745.0;  // numerically impossible corner
  return std::log1p(theta) - (theta + 1.0) * (lu + lv) - (2.0 + 1.0 / theta) * std::log(s);
}

double gumbel_log_pdf(double theta, double lu, double lv) {
  const double lx = -lu, ly = -lv;  // positive
  const double llx = std::log(lx), lly = std::log(ly);
  const double ex = std::exp(theta * llx), ey = std::exp(theta * lly);
  const double s = ex + ey;
  const double ls = std::log(s);
  const double a = std::exp(ls / theta);
  return -a + lx + ly + (theta - 1.0) * (llx + lly) + (2.0 / theta - 2.0) * ls +
         std::log1p((theta - 1.0) / a);
}

// Bivariate normal / Student-t CDF via the correlation integral
//   C(rho) = C(0) + Int_0^rho dC/dr dr,
// with r = sin(t) absorbing the 1/sqrt(1-r^2) factor. dC/dr is exp(-Q/2)/2pi
// for the normal and (1+Q/nu)^{-nu/2}/2pi for the t. Starting at rho = 0
// keeps the integrand smooth everywhere on |rho| <= 0.9999.
double elliptical_correction(double rho, double x, double y, bool student, double nu) {
  const double dxy2 = (x - y) * (x - y);
  const double xy2 = 2.0 * x * y;
  auto integrand = [&](double t) {
    const double s = std::sin(t);
    const double q = (dxy2 / (1.0 - s) + xy2) / (1.0 + s);
    const double g = student ? std::pow(1.0 + q / nu, -0.5 * nu) : std::exp(-0.5 * q);
    return g / (2.0 * M_PI);
  };
  return integrate_gl(integrand, 0.0, std::asin(rho));
}

// T2(x, y; rho=0, nu) = E[Phi(x s) Phi(y s)] with s = sqrt(W/nu), W ~ chi2_nu.
// Uncorrelated t margins share the mixing variable, so this is not u*v.
double student_uncorrelated_cdf(double nu, double x, double y) {
  const double tail = 36.0;
  const double wmax = nu + 2.0 * std::sqrt(nu * tail) + 2.0 * tail;
  const double smax = std::sqrt(wmax / nu);
  const double lc = std::log(2.0) + 0.5 * nu * std::log(0.5 * nu) - std::lgamma(0.5 * nu);
  auto integrand = [&](double s) {
    return std_normal_cdf(x * s) * std_normal_cdf(y * s) *
           std::exp(lc + (nu - 1.0) * std::log(s) - 0.5 * nu * s * s);
  };
  const int panels = 4;
  const double width = smax / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    total += integrate_gl(integrand, p * width, (p + 1) * width);
  }
  return total;
}

double gaussian_cdf(double rho, double u, double v) {
  const double x = std_normal_quantile(u);
  const double y = std_normal_quantile(v);
  return std::clamp(u * v + elliptical_correction(rho, x, y, false, 0.0), 0.0, 1.0);
}

double student_cdf(double rho, double nu, double u, double v) {
  const double x = student_t_quantile(u, nu);
  const double y = student_t_quantile(v, nu);
  const double base = student_uncorrelated_cdf(nu, x, y);
  return std::clamp(base + elliptical_correction(rho, x, y, true, nu), 0.0, 1.0);
}

double clayton_cdf(double theta, double u, double v) {
  const double s = std::exp(-theta * std::log(u)) + std::exp(-theta * std::log(v)) - 1.0;
  if (!(s > 0.0)) return 0.0;
  return std::exp(-std::log(s) / theta);
}

double gumbel_cdf(double theta, double u, double v) {
  const double lx = -std::log(u), ly = -std::log(v);
  const double s = std::exp(theta * std::log(lx)) + std::exp(theta * std::log(ly));
  return std::exp(-std::exp(std::log(s) / theta));
}

double gaussian_h(double rho, double u, double v) {
  const double x = std_normal_quantile(u);
  const double y = std_normal_quantile(v);
  return std_normal_cdf((y - rho * x) / std::sqrt(1.0 - rho * rho));
}

double gaussian_hinv(double rho, double u, double p) {
  const double x = std_normal_quantile(u);
  const double z = std_normal_quantile(p);
  return std_normal_cdf(z * std::sqrt(1.0 - rho * rho) + rho * x);
}

double student_h(double rho, double nu, double u, double v) {
  const double x = student_t_quantile(u, nu);
  const double y = student_t_quantile(v, nu);
  const double scale = std::sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0));
  return student_t_cdf((y - rho * x) / scale, nu + 1.0);
}

double student_hinv(double rho, double nu, double u, double p) {
  const double x = student_t_quantile(u, nu);
  const double scale = std::sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0));
  const double y = student_t_quantile(p, nu + 1.0) * scale + rho * x;
  return student_t_cdf(y, nu);
}

double clayton_h(double theta, double u, double v) {
  // h(v|u) = u^{-theta-1} (u^{-theta} + v^{-theta} - 1)^{-1-1/theta}
  const double lu = std::log(u), lv = std::log(v);
  const double e1 = std::exp(-theta * lu);
  const double s = e1 + std::exp(-theta * lv) - 1.0;
  if (!(s > 0.0)) return 1.0;
  return std::exp(-(theta + 1.0) * lu - (1.0 + 1.0 / theta) * std::log(s));
}

double clayton_hinv(double theta, double u, double p) {
  const double lu = std::log(u);
  const double lt = -theta / (theta + 1.0) * std::log(p) - theta * lu;
  double lv;
  if (lt > 690.0) {
    lv = -lt / theta;  // the p-term dominates, remaining factors are O(1)
  } else {
    const double s = std::exp(lt) - std::exp(-theta * lu) + 1.0;
    lv = -std::log(s) / theta;
  }
  return clamp_uv(std::exp(lv));
}

double gumbel_h(double theta, double u, double v) {
  const double lx = -std::log(u), ly = -std::log(v);
  const double llx = std::log(lx);
  const double s = std::exp(theta * llx) + std::exp(theta * std::log(ly));
  const double ls = std::log(s);
  const double a = std::exp(ls / theta);
  return std::exp(-a + (1.0 / theta - 1.0) * ls + (theta - 1.0) * llx + lx);
}

// Monotone solve of h(v|u) = p; Newton (derivative = copula pdf) guarded by
// bisection. Used by families without a closed-form inverse.
template <typename H, typename Dens>
double hinv_numeric(H&& h, Dens&& dens, double p) {
  double lo = kUvMin, hi = kUvMax;
  double v = std::clamp(p, 0.01, 0.99);
  for (int it = 0; it < 200; ++it) {
    const double f = h(v) - p;
    if (std::fabs(f) < 1e-12) return v;
    if (f > 0.0) {
      hi = v;
    } else {
      lo = v;
    }
    const double d = dens(v);
    double next = (d > 1e-100) ? v - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - v) < 1e-15 && std::fabs(f) < 1e-9) return next;
    v = next;
    if (hi - lo < 1e-15) break;
  }
  return v;
}

double gumbel_hinv(double theta, double u, double p) {
  return hinv_numeric([&](double v) { return gumbel_h(theta, u, v); },
                      [&](double v) { return std::exp(gumbel_log_pdf(theta, std::log(u), std::log(v))); },
                      p);
}

// Base-copula dispatch (rotation 0). All families here are exchangeable.
double base_log_pdf(const BivariateCopula& c, double u, double v) {
  switch (c.family) {
    case Family::kIndependence:
      return 0.0;
    case Family::kGaussian:
      return gaussian_log_pdf(c.theta, std_normal_quantile(u), std_normal_quantile(v));
    case Family::kStudentT:
      return student_log_pdf(c.theta, c.nu, student_t_quantile(u, c.nu),
                             student_t_quantile(v, c.nu));
    case Family::kClayton:
      return clayton_log_pdf(c.theta, std::log(u), std::log(v));
    case Family::kGumbel:
      return gumbel_log_pdf(c.theta, std::log(u), std::log(v));
  }
  throw DomainError("unknown family");
}

double base_cdf(const BivariateCopula& c, double u, double v) {
  switch (c.family) {
    case Family::kIndependence:
      return u * v;
    case Family::kGaussian:
      return gaussian_cdf(c.theta, u, v);
    case Family::kStudentT:
      return student_cdf(c.theta, c.nu, u, v);
    case Family::kClayton:
      return clayton_cdf(c.theta, u, v);
    case Family::kGumbel:
      return gumbel_cdf(c.theta, u, v);
  }
  throw DomainError("unknown family");
}

double base_h(const BivariateCopula& c, double u, double v) {
  // conditional CDF of v given the conditioning coordinate u
  switch (c.family) {
    case Family::kIndependence:
      return v;
    case Family::kGaussian:
      return gaussian_h(c.theta, u, v);
    case Family::kStudentT:
      return student_h(c.theta, c.nu, u, v);
    case Family::kClayton:
      return clayton_h(c.theta, u, v);
    case Family::kGumbel:
      return gumbel_h(c.theta, u, v);
  }
  throw DomainError("unknown family");
}

double base_hinv(const BivariateCopula& c, double u, double p) {
  switch (c.family) {
    case Family::kIndependence:
      return p;
    case Family::kGaussian:
      return gaussian_hinv(c.theta, u, p);
    case Family::kStudentT:
      return student_hinv(c.theta, c.nu, u, p);
    case Family::kClayton:
      return clayton_hinv(c.theta, u, p);
    case Family::kGumbel:
      return gumbel_hinv(c.theta, u, p);
  }
  throw DomainError("unknown family");
}

// ---- fitting helpers ---------------------------------------------------------

// Rotate observations into base-copula coordinates.
void to_base_coords(int rotation, double& u, double& v) {
  switch (rotation) {
    case 0:
      break;
    case 90:
      u = 1.0 - u;
      break;
    case 180:
      u = 1.0 - u;
      v = 1.0 - v;
      break;
    case 270:
      v = 1.0 - v;
      break;
    default:
      throw DomainError("rotation must be one of 0/90/180/270");
  }
}

struct PreparedPairs {
  std::vector<double> u, v;
};

PreparedPairs prepare(std::span<const std::pair<double, double>> pairs, int rotation) {
  PreparedPairs out;
  out.u.reserve(pairs.size());
  out.v.reserve(pairs.size());
  for (const auto& [pu, pv] : pairs) {
    double u = clamp_uv(pu), v = clamp_uv(pv);
    to_base_coords(rotation, u, v);
    out.u.push_back(u);
    out.v.push_back(v);
  }
  return out;
}

double floor_lp(double lp) { return std::max(lp, -745.0); }

FitResult fit_gaussian_like(Family family, std::span<const std::pair<double, double>> pairs,
                            double tau_hat) {
  const PreparedPairs d = prepare(pairs, 0);
  const std::size_t n = d.u.size();
  const double rho0 = std::clamp(std::sin(0.5 * M_PI * tau_hat), -0.99, 0.99);

  FitResult best;
  best.n_obs = n;
  best.loglik = -std::numeric_limits<double>::infinity();

  const auto nu_list = (family == Family::kStudentT)
                           ? std::vector<double>(kNuGrid.begin(), kNuGrid.end())
                           : std::vector<double>{0.0};
  for (const double nu : nu_list) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (family == Family::kStudentT) {
        x[i] = student_t_quantile(d.u[i], nu);
        y[i] = student_t_quantile(d.v[i], nu);
      } else {
        x[i] = std_normal_quantile(d.u[i]);
        y[i] = std_normal_quantile(d.v[i]);
      }
    }

    std::function<double(double)> nll;
    if (family == Family::kGaussian) {
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sxx += x[i] * x[i] + y[i] * y[i];
        sxy += x[i] * y[i];
      }
      nll = [n, sxx, sxy](double rho) {
        const double om = 1.0 - rho * rho;
        return 0.5 * n * std::log(om) + (rho * rho * sxx - 2.0 * rho * sxy) / (2.0 * om);
      };
    } else {
      double const_term = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const_term += std::log1p(x[i] * x[i] / nu) + std::log1p(y[i] * y[i] / nu);
      }
      const double lg = std::lgamma(0.5 * (nu + 2.0)) + std::lgamma(0.5 * nu) -
                        2.0 * std::lgamma(0.5 * (nu + 1.0));
      nll = [&x, &y, n, nu, const_term, lg](double rho) {
        const double om = 1.0 - rho * rho;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          s += std::log1p((x[i] * x[i] - 2.0 * rho * x[i] * y[i] + y[i] * y[i]) / (nu * om));
        }
        return -(n * (lg - 0.5 * std::log(om)) + 0.5 * (nu + 1.0) * const_term -
                 0.5 * (nu + 2.0) * s);
      };
    }

    const double rho_hat = brent_minimize(nll, -kRhoMax, kRhoMax, 1e-7);
    const double cand[2] = {rho_hat, rho0};
    for (const double rho : cand) {
      const double ll = -nll(rho);
      if (ll > best.loglik) {
        best.loglik = ll;
        best.copula.family = family;
        best.copula.rotation = 0;
        best.copula.theta = rho;
        best.copula.nu = (family == Family::kStudentT) ? nu : 4.0;
      }
    }
  }
  best.aic = 2.0 * static_cast<double>(best.copula.parameter_count()) - 2.0 * best.loglik;
  return best;
}

FitResult fit_archimedean(Family family, int rotation,
                          std::span<const std::pair<double, double>> pairs, double tau_hat) {
  const PreparedPairs d = prepare(pairs, rotation);
  const std::size_t n = d.u.size();
  std::vector<double> lu(n), lv(n);
  for (std::size_t i = 0; i < n; ++i) {
    lu[i] = std::log(d.u[i]);
    lv[i] = std::log(d.v[i]);
  }

  // Base copula sees positive dependence after rotation.
  double base_tau = (rotation == 90 || rotation == 270) ? -tau_hat : tau_hat;
  base_tau = std::clamp(base_tau, 0.01, 0.99);

  const double theta_lo = (family == Family::kClayton) ? kClaytonThetaMin : 1.0;
  double theta0 = (family == Family::kClayton) ? 2.0 * base_tau / (1.0 - base_tau)
                                               : 1.0 / (1.0 - base_tau);
  theta0 = std::clamp(theta0, theta_lo, kThetaMax);

  auto nll = [&](double theta) {
    double s = 0.0;
    if (family == Family::kClayton) {
      for (std::size_t i = 0; i < n; ++i) s += floor_lp(clayton_log_pdf(theta, lu[i], lv[i]));
    } else {
      for (std::size_t i = 0; i < n; ++i) s += floor_lp(gumbel_log_pdf(theta, lu[i], lv[i]));
    }
    return -s;
  };

  const double theta_hat = brent_minimize(nll, theta_lo, kThetaMax, 1e-7);
  FitResult out;
  out.n_obs = n;
  const double cand[2] = {theta_hat, theta0};
  out.loglik = -std::numeric_limits<double>::infinity();
  for (const double theta : cand) {
    const double ll = -nll(theta);
    if (ll > out.loglik) {
      out.loglik = ll;
      out.copula.family = family;
      out.copula.rotation = rotation;
      out.copula.theta = theta;
    }
  }
  out.aic = 2.0 - 2.0 * out.loglik;
  return out;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::kIndependence:
      return "independence";
    case Family::kGaussian:
      return "gaussian";
    case Family::kStudentT:
      return "student";
    case Family::kClayton:
      return "clayton";
    case Family::kGumbel:
      return "gumbel";
  }
  return "unknown";
}

Family family_from_name(const std::string& name) {
  if (name == "independence") return Family::kIndependence;
  if (name == "gaussian") return Family::kGaussian;
  if (name == "student") return Family::kStudentT;
  if (name == "clayton") return Family::kClayton;
  if (name == "gumbel") return Family::kGumbel;
  throw FormatError("unknown copula family name: " + name);
}

void BivariateCopula::validate() const {
  if (rotation != 0 && rotation != 90 && rotation != 180 && rotation != 270) {
    throw DomainError("copula rotation must be one of 0/90/180/270");
  }
  const bool rotatable = family == Family::kClayton || family == Family::kGumbel;
  if (rotation != 0 && !rotatable) {
    throw DomainError("rotation is only defined for Clayton and Gumbel");
  }
  switch (family) {
    case Family::kIndependence:
      break;
    case Family::kGaussian:
      if (!(theta > -1.0 && theta < 1.0)) throw DomainError("Gaussian rho must lie in (-1,1)");
      break;
    case Family::kStudentT:
      if (!(theta > -1.0 && theta < 1.0)) throw DomainError("StudentT rho must lie in (-1,1)");
      if (!(nu > 0.0)) throw DomainError("StudentT nu must be positive");
      break;
    case Family::kClayton:
      if (!(theta > 0.0)) throw DomainError("Clayton theta must be positive");
      break;
    case Family::kGumbel:
      if (!(theta >= 1.0)) throw DomainError("Gumbel theta must be >= 1");
      break;
  }
}

std::size_t BivariateCopula::parameter_count() const {
  switch (family) {
    case Family::kIndependence:
      return 0;
    case Family::kStudentT:
      return 2;
    default:
      return 1;
  }
}

double log_pdf(const BivariateCopula& c, double u, double v) {
  c.validate();
  u = clamp_uv(u);
  v = clamp_uv(v);
  to_base_coords(c.rotation, u, v);
  return base_log_pdf(c, u, v);
}

double pdf(const BivariateCopula& c, double u, double v) {
  return std::exp(log_pdf(c, u, v));
}

double cdf(const BivariateCopula& c, double u, double v) {
  c.validate();
  u = std::clamp(u, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0) return v;
  if (v >= 1.0) return u;
  const double cu = clamp_uv(u), cv = clamp_uv(v);
  switch (c.rotation) {
    case 0:
      return base_cdf(c, cu, cv);
    case 90:
      return std::clamp(cv - base_cdf(c, 1.0 - cu, cv), 0.0, 1.0);
    case 180:
      return std::clamp(cu + cv - 1.0 + base_cdf(c, 1.0 - cu, 1.0 - cv), 0.0, 1.0);
    case 270:
      return std::clamp(cu - base_cdf(c, cu, 1.0 - cv), 0.0, 1.0);
    default:
      throw DomainError("invalid rotation");
  }
}

double hfunc1(const BivariateCopula& c, double u, double v) {
  c.validate();
  u = clamp_uv(u);
  v = clamp_uv(v);
  double out;
  switch (c.rotation) {
    case 0:
      out = base_h(c, u, v);
      break;
    case 90:
      out = base_h(c, 1.0 - u, v);
      break;
    case 180:
      out = 1.0 - base_h(c, 1.0 - u, 1.0 - v);
      break;
    case 270:
      out = 1.0 - base_h(c, u, 1.0 - v);
      break;
    default:
      throw DomainError("invalid rotation");
  }
  return std::clamp(out, 0.0, 1.0);
}

double hfunc2(const BivariateCopula& c, double u, double v) {
  // base families are exchangeable: h2_base(u,v) = h1_base with swapped roles
  c.validate();
  u = clamp_uv(u);
  v = clamp_uv(v);
  double out;
  switch (c.rotation) {
    case 0:
      out = base_h(c, v, u);
      break;
    case 90:
      out = 1.0 - base_h(c, v, 1.0 - u);
      break;
    case 180:
      out = 1.0 - base_h(c, 1.0 - v, 1.0 - u);
      break;
    case 270:
      out = base_h(c, 1.0 - v, u);
      break;
    default:
      throw DomainError("invalid rotation");
  }
  return std::clamp(out, 0.0, 1.0);
}

double hinv1(const BivariateCopula& c, double u, double p) {
  c.validate();
  u = clamp_uv(u);
  p = clamp_uv(p);
  double out;
  switch (c.rotation) {
    case 0:
      out = base_hinv(c, u, p);
      break;
    case 90:
      out = base_hinv(c, 1.0 - u, p);
      break;
    case 180:
      out = 1.0 - base_hinv(c, 1.0 - u, 1.0 - p);
      break;
    case 270:
      out = 1.0 - base_hinv(c, u, 1.0 - p);
      break;
    default:
      throw DomainError("invalid rotation");
  }
  return clamp_uv(out);
}

double hinv2(const BivariateCopula& c, double p, double v) {
  c.validate();
  p = clamp_uv(p);
  v = clamp_uv(v);
  double out;
  switch (c.rotation) {
    case 0:
      out = base_hinv(c, v, p);
      break;
    case 90:
      out = 1.0 - base_hinv(c, v, 1.0 - p);
      break;
    case 180:
      out = 1.0 - base_hinv(c, 1.0 - v, 1.0 - p);
      break;
    case 270:
      out = base_hinv(c, 1.0 - v, p);
      break;
    default:
      throw DomainError("invalid rotation");
  }
  return clamp_uv(out);
}

double kendall_tau(const BivariateCopula& c) {
  c.validate();
  double tau;
  switch (c.family) {
    case Family::kIndependence:
      tau = 0.0;
      break;
    case Family::kGaussian:
    case Family::kStudentT:
      tau = 2.0 / M_PI * std::asin(c.theta);
      break;
    case Family::kClayton:
      tau = c.theta / (c.theta + 2.0);
      break;
    case Family::kGumbel:
      tau = 1.0 - 1.0 / c.theta;
      break;
    default:
      throw DomainError("unknown family");
  }
  if (c.rotation == 90 || c.rotation == 270) tau = -tau;
  return tau;
}

double tau_inverse(Family family, double tau) {
  switch (family) {
    case Family::kIndependence:
      return 0.0;
    case Family::kGaussian:
    case Family::kStudentT:
      if (!(tau > -1.0 && tau < 1.0)) throw DomainError("tau must lie in (-1,1)");
      return std::sin(0.5 * M_PI * tau);
    case Family::kClayton:
      if (!(tau > 0.0 && tau < 1.0)) {
        throw DomainError("unrotated Clayton requires tau in (0,1); apply a rotation instead");
      }
      return 2.0 * tau / (1.0 - tau);
    case Family::kGumbel:
      if (!(tau >= 0.0 && tau < 1.0)) {
        throw DomainError("unrotated Gumbel requires tau in [0,1); apply a rotation instead");
      }
      return 1.0 / (1.0 - tau);
  }
  throw DomainError("unknown family");
}

double empirical_tau(std::span<const std::pair<double, double>> pairs) {
  const std::size_t n = pairs.size();
  if (n < 10) {
    throw NumericError("empirical_tau: need at least 10 pairs, got " + std::to_string(n));
  }

  // Knight's O(n log n): sort by (u, v), discordant pairs = inversions in v.
  std::vector<std::pair<double, double>> s(pairs.begin(), pairs.end());
  std::sort(s.begin(), s.end());

  double tied_u = 0.0, tied_uv = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s[j].first == s[i].first) ++j;
    const double g = static_cast<double>(j - i);
    tied_u += g * (g - 1.0) / 2.0;
    for (std::size_t k = i; k < j;) {
      std::size_t l = k;
      while (l < n && s[l].second == s[k].second) ++l;
      const double gg = static_cast<double>(l - k);
      tied_uv += gg * (gg - 1.0) / 2.0;
      k = l;
    }
    i = j;
  }

  std::vector<double> v(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = s[i].second;

  double discordant = 0.0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t a = lo, b = mid, o = lo;
      while (a < mid && b < hi) {
        if (v[b] < v[a]) {
          discordant += static_cast<double>(mid - a);
          tmp[o++] = v[b++];
        } else {
          tmp[o++] = v[a++];
        }
      }
      while (a < mid) tmp[o++] = v[a++];
      while (b < hi) tmp[o++] = v[b++];
      std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
    }
  }

  std::vector<double> vs(n);
  for (std::size_t i = 0; i < n; ++i) vs[i] = s[i].second;
  std::sort(vs.begin(), vs.end());
  double tied_v = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && vs[j] == vs[i]) ++j;
    const double g = static_cast<double>(j - i);
    tied_v += g * (g - 1.0) / 2.0;
    i = j;
  }

  const double total = static_cast<double>(n) * (n - 1.0) / 2.0;
  const double concordant = total - tied_u - tied_v + tied_uv - discordant;
  return (concordant - discordant) / total;
}

FitResult fit_mle(Family family, int rotation, std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 10) {
    throw NumericError("fit_mle: need at least 10 pairs");
  }
  const double tau_hat = empirical_tau(pairs);
  FitResult result;
  switch (family) {
    case Family::kIndependence:
      result.copula = BivariateCopula{};
      result.loglik = 0.0;
      result.aic = 0.0;
      result.n_obs = pairs.size();
      break;
    case Family::kGaussian:
    case Family::kStudentT:
      if (rotation != 0) throw DomainError("fit_mle: elliptical families take rotation 0");
      result = fit_gaussian_like(family, pairs, tau_hat);
      break;
    case Family::kClayton:
    case Family::kGumbel:
      result = fit_archimedean(family, rotation, pairs, tau_hat);
      break;
  }
  if (!std::isfinite(result.loglik)) {
    throw NumericError("fit_mle: no candidate with finite log-likelihood");
  }
  return result;
}

FitResult select_family(std::span<const std::pair<double, double>> pairs) {
  const std::size_t n = pairs.size();
  const double tau_hat = empirical_tau(pairs);

  FitResult indep;
  indep.copula = BivariateCopula{};
  indep.loglik = 0.0;
  indep.aic = 0.0;
  indep.n_obs = n;

  // tau independence test: cannot reject => keep Independence outright
  const double nn = static_cast<double>(n);
  const double tau_sd = std::sqrt(2.0 * (2.0 * nn + 5.0) / (9.0 * nn * (nn - 1.0)));
  if (std::fabs(tau_hat) < 1.96 * tau_sd) {
    return indep;
  }

  // candidates in tie-break precedence order
  struct Candidate {
    Family family;
    int rotation;
  };
  std::vector<Candidate> candidates = {{Family::kGaussian, 0}};
  if (tau_hat >= 0.0) {
    candidates.push_back({Family::kClayton, 0});
    candidates.push_back({Family::kClayton, 180});
    candidates.push_back({Family::kGumbel, 0});
    candidates.push_back({Family::kGumbel, 180});
  } else {
    candidates.push_back({Family::kClayton, 90});
    candidates.push_back({Family::kClayton, 270});
    candidates.push_back({Family::kGumbel, 90});
    candidates.push_back({Family::kGumbel, 270});
  }
  candidates.push_back({Family::kStudentT, 0});

  FitResult best = indep;
  for (const auto& cand : candidates) {
    const FitResult fit = fit_mle(cand.family, cand.rotation, pairs);
    if (fit.aic < best.aic) best = fit;
  }
  return best;
}

UVPairs sample_pair(const BivariateCopula& c, std::size_t n, std::uint64_t seed) {
  c.validate();
  Rng rng(seed);
  UVPairs out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    const double w = rng.uniform01();
    out.emplace_back(u, hinv1(c, u, w));
  }
  return out;
}

std::string copula_record(const BivariateCopula& c) {
  char buf[128];
  switch (c.family) {
    case Family::kIndependence:
      return "independence 0";
    case Family::kStudentT:
      std::snprintf(buf, sizeof(buf), "student %d %.17g %.17g", c.rotation, c.theta, c.nu);
      return buf;
    default:
      std::snprintf(buf, sizeof(buf), "%s %d %.17g", family_name(c.family).c_str(), c.rotation,
                    c.theta);
      return buf;
  }
}

BivariateCopula parse_copula_record(const std::string& line) {
  std::istringstream in(line);
  std::string name;
  if (!(in >> name)) throw FormatError("copula record: empty line");
  BivariateCopula c;
  c.family = family_from_name(name);
  if (!(in >> c.rotation)) throw FormatError("copula record: missing rotation in '" + line + "'");
  if (c.family != Family::kIndependence) {
    if (!(in >> c.theta)) throw FormatError("copula record: missing parameter in '" + line + "'");
    if (c.family == Family::kStudentT && !(in >> c.nu)) {
      throw FormatError("copula record: missing nu in '" + line + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace vcae
