#include "iyow/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iyow/error.hpp"

namespace iyow {

namespace {

// Continued fraction for I_x(a, b), modified Lentz. Converges quickly for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 10000;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
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
  throw NumericError("incomplete beta continued fraction did not converge");
}

double log_front(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw NumericError("reg_inc_beta needs a, b > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) throw NumericError("reg_inc_beta needs 0 <= x <= 1, got " + std::to_string(x));
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front(x, a, b)) * beta_continued_fraction(x, a, b) / a;
  }
  // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
  return 1.0 - std::exp(log_front(1.0 - x, b, a)) * beta_continued_fraction(1.0 - x, b, a) / b;
}

namespace {

void check_df(double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw NumericError("F distribution needs positive degrees of freedom");
}

}  // namespace

double f_cdf(double x, double d1, double d2) {
  check_df(d1, d2);
  if (std::isnan(x) || x < 0.0) throw NumericError("f_cdf needs x >= 0");
  if (std::isinf(x)) return 1.0;
  return reg_inc_beta(d1 * x / (d1 * x + d2), d1 / 2.0, d2 / 2.0);
}

double f_sf(double x, double d1, double d2) {
  check_df(d1, d2);
  if (std::isnan(x) || x < 0.0) throw NumericError("f_sf needs x >= 0");
  if (std::isinf(x)) return 0.0;
  return reg_inc_beta(d2 / (d2 + d1 * x), d2 / 2.0, d1 / 2.0);
}

double t_cdf(double t, double nu) {
  if (!(nu > 0.0)) throw NumericError("t_cdf needs nu > 0");
  if (std::isnan(t)) throw NumericError("t_cdf of NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * reg_inc_beta(nu / (nu + t * t), nu / 2.0, 0.5);
  return t > 0 ? 1.0 - tail : tail;
}

double normal_cdf(double x) {
  if (std::isnan(x)) throw NumericError("normal_cdf of NaN");
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_two_sided_p(double z) {
  if (std::isnan(z)) throw NumericError("normal p-value of NaN");
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

}  // namespace iyow
