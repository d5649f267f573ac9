#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vcae {

enum class Family { kIndependence, kGaussian, kStudentT, kClayton, kGumbel };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Bivariate copula: family, parameter(s), rotation. Rotations 90/180/270 are
// defined only for Clayton and Gumbel and extend them to negative dependence.
struct BivariateCopula {
  Family family = Family::kIndependence;
  int rotation = 0;    // one of 0, 90, 180, 270
  double theta = 0.0;  // rho for Gaussian/StudentT, theta for Clayton/Gumbel
  double nu = 4.0;     // StudentT degrees of freedom

  void validate() const;
  std::size_t parameter_count() const;
};

struct FitResult {
  BivariateCopula copula;
  double loglik = 0.0;
  double aic = 0.0;
  std::size_t n_obs = 0;
};

using UVPairs = std::vector<std::pair<double, double>>;

// Density and distribution. Inputs are clamped to [1e-10, 1-1e-10].
double pdf(const BivariateCopula& c, double u, double v);
double log_pdf(const BivariateCopula& c, double u, double v);
double cdf(const BivariateCopula& c, double u, double v);

// Conditional CDFs: hfunc1 = dC/du = P(V<=v | U=u), hfunc2 = dC/dv.
double hfunc1(const BivariateCopula& c, double u, double v);
double hfunc2(const BivariateCopula& c, double u, double v);

// Inverses: hinv1 solves hfunc1(u, v) = p for v; hinv2 solves hfunc2(u, v) = p for u.
double hinv1(const BivariateCopula& c, double u, double p);
double hinv2(const BivariateCopula& c, double p, double v);

// Closed-form Kendall tau of a fitted copula (sign follows rotation).
double kendall_tau(const BivariateCopula& c);

// Base parameter whose unrotated copula attains the given tau.
double tau_inverse(Family family, double tau);

// Sample tau-a: (concordant - discordant) / (n choose 2). Requires n >= 10.
double empirical_tau(std::span<const std::pair<double, double>> pairs);

// Maximum likelihood for one family/rotation, initialized at the
// tau-inversion estimate. StudentT profiles nu over {2,3,4,6,10,20,30}.
FitResult fit_mle(Family family, int rotation, std::span<const std::pair<double, double>> pairs);

// Fits every candidate family (rotations chosen by the tau sign) and returns
// the minimum-AIC fit. Falls back to Independence when the tau independence
// test cannot reject.
FitResult select_family(std::span<const std::pair<double, double>> pairs);

// n draws via the conditional method: u ~ U(0,1), v = hinv1(u, w).
UVPairs sample_pair(const BivariateCopula& c, std::size_t n, std::uint64_t seed);

// One-line text record: family rotation param [param], 17 significant digits.
std::string copula_record(const BivariateCopula& c);
BivariateCopula parse_copula_record(const std::string& line);

}  // namespace vcae
