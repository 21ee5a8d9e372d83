#pragma once

// Distribution functions needed by the F tests and Wald p-values.

namespace iyow {

// Regularized incomplete beta I_x(a, b) for 0 <= x <= 1 and a, b > 0.
double reg_inc_beta(double x, double a, double b);

// CDF of the F(d1, d2) distribution at x >= 0.
double f_cdf(double x, double d1, double d2);
// Upper tail 1 - f_cdf, evaluated directly so small p-values keep precision.
double f_sf(double x, double d1, double d2);

// Student t with nu degrees of freedom.
double t_cdf(double t, double nu);

double normal_cdf(double x);
// Two-sided p-value for a standard normal statistic.
double normal_two_sided_p(double z);

}  // namespace iyow
