#include "vcae/special.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vcae/error.hpp"

namespace vcae {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("reg_inc_beta: continued fraction failed to converge (a=" +
                     std::to_string(a) + ", b=" + std::to_string(b) + ")");
}

}  // namespace

double std_normal_pdf(double x) {
  return 0.3989422804014327 * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / kSqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("std_normal_quantile: p=" + std::to_string(p) + " outside (0,1)");
  }
  // Acklam's rational approximation, then one Newton step on the CDF.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = std_normal_cdf(x) - p;
  const double pdf = std_normal_pdf(x);
  if (pdf > 0.0) x -= e / pdf;
  return x;
}

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("reg_inc_beta: a and b must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_cf(a, b, x) / a;
  }
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_pdf(double x, double nu) {
  if (!(nu > 0.0)) throw DomainError("student_t_pdf: nu must be positive");
  const double ln = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                    0.5 * std::log(nu * M_PI) -
                    0.5 * (nu + 1.0) * std::log1p(x * x / nu);
  return std::exp(ln);
}

double student_t_cdf(double x, double nu) {
  if (!(nu > 0.0)) throw DomainError("student_t_cdf: nu must be positive");
  if (x == 0.0) return 0.5;
  if (nu >= 1e5) {
    // Asymptotic in 1/nu; error O(nu^-2) is far below the 1e-8 contract here.
    return std_normal_cdf(x) - std_normal_pdf(x) * (x * x * x + x) / (4.0 * nu);
  }
  const double w = nu / (nu + x * x);
  const double half_tail = 0.5 * reg_inc_beta(0.5 * nu, 0.5, w);
  return x > 0.0 ? 1.0 - half_tail : half_tail;
}

double student_t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("student_t_quantile: p=" + std::to_string(p) + " outside (0,1)");
  }
  if (!(nu > 0.0)) throw DomainError("student_t_quantile: nu must be positive");

  // Bracket the root by geometric expansion, then safeguarded Newton:
  // bisection whenever a Newton step leaves the bracket or stalls.
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, nu) > p) {
    lo *= 2.0;
    if (lo < -1e300) throw NumericError("student_t_quantile: bracket expansion failed");
  }
  while (student_t_cdf(hi, nu) < p) {
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("student_t_quantile: bracket expansion failed");
  }

  double x = 0.0;
  if (p > 1e-300 && p < 1.0 - 1e-16) {
    const double z = std_normal_quantile(p);
    x = z + (z * z * z + z) / (4.0 * nu);  // Cornish-Fisher start
  }
  if (x < lo || x > hi) x = 0.5 * (lo + hi);

  for (int it = 0; it < 200; ++it) {
    const double f = student_t_cdf(x, nu) - p;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double df = student_t_pdf(x, nu);
    double next = (df > 0.0) ? x - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::fabs(next - x);
    x = next;
    if (step <= 1e-12 * std::max(1.0, std::fabs(x)) || hi - lo <= 1e-13 * std::max(1.0, std::fabs(x))) {
      break;
    }
  }
  return x;
}

}  // namespace vcae
