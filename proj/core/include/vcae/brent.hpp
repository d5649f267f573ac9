#pragma once

#include <cmath>
#include <utility>

#include "vcae/error.hpp"

namespace vcae {

// Derivative-free scalar minimization on [lo, hi] (Brent: golden section with
// parabolic interpolation). Returns a point within tol of the minimizer for
// unimodal f. Throws NumericError if f evaluates to a non-finite value.
template <typename F>
double brent_minimize(F&& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw DomainError("brent_minimize: requires lo < hi");
  constexpr double kGolden = 0.3819660112501051;
  constexpr int kMaxIter = 200;

  auto eval = [&](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw NumericError("brent_minimize: f(x) not finite");
    return v;
  };

  double a = lo, b = hi;
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = eval(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  for (int iter = 0; iter < kMaxIter; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::fabs(x) + 1e-12;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - xm) <= tol2 - 0.5 * (b - a)) break;

    bool parabolic = false;
    if (std::fabs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_old = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (xm > x) ? tol1 : -tol1;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x >= xm) ? a - x : b - x;
      d = kGolden * e;
    }

    const double u = (std::fabs(d) >= tol1) ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = eval(u);
    if (fu <= fx) {
      if (u >= x) {
        a = x;
      } else {
        b = x;
      }
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) {
        a = u;
      } else {
        b = u;
      }
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace vcae
