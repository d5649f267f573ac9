#pragma once

namespace vcae {

double std_normal_pdf(double x);

// Phi(x), absolute error well below 1e-12.
double std_normal_cdf(double x);

// Phi^{-1}(p) for p in (0,1). Throws DomainError otherwise.
double std_normal_quantile(double p);

// Regularized incomplete beta I_x(a,b).
double reg_inc_beta(double a, double b, double x);

double student_t_pdf(double x, double nu);

// CDF of the Student-t distribution with nu > 0 degrees of freedom.
double student_t_cdf(double x, double nu);

// Inverse of student_t_cdf, accurate to 1e-8 or better.
double student_t_quantile(double p, double nu);

}  // namespace vcae
