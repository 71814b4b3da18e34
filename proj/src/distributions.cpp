#include "fwerlim/distributions.hpp"

#include <array>
#include <cmath>
#include <string>

#include "fwerlim/errors.hpp"

namespace fwerlim {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(what) + ": argument must be finite");
  }
}

void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError(std::string(what) + ": probability must lie strictly inside (0, 1), got " +
                      std::to_string(p));
  }
}

// Acklam's rational approximation to Phi^{-1}(p), relative error about 1.15e-9.
double acklam_lower(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Phi^{-1}(p) for 0 < p <= 0.5: rational start plus two Halley corrections.
double lower_quantile(double p) {
  double x = acklam_lower(p);
  for (int step = 0; step < 2; ++step) {
    const double err = 0.5 * std::erfc(-x * kInvSqrt2) - p;
    // err / phi(x) written as (err / p) * (p / phi(x)) so subnormal p stays finite.
    const double u = (err / p) * std::exp(std::log(p) + 0.5 * x * x + kLogSqrt2Pi);
    if (!std::isfinite(u)) break;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

// log(1 - Phi(x)) for x >= 37 by the asymptotic Mills-ratio series.
double log_upper_tail_asymptotic(double x, double* mills_ratio) {
  const double z = 1.0 / (x * x);
  const double series =
      1.0 + z * (-1.0 + z * (3.0 + z * (-15.0 + z * (105.0 + z * (-945.0 + z * 10395.0)))));
  if (mills_ratio != nullptr) *mills_ratio = series / x;
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

}  // namespace

double normal_cdf(double x) {
  require_finite(x, "normal_cdf");
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double normal_sf(double x) {
  require_finite(x, "normal_sf");
  return 0.5 * std::erfc(x * kInvSqrt2);
}

double normal_quantile(double p) {
  require_open_unit(p, "normal_quantile");
  if (p <= 0.5) return lower_quantile(p);
  return -lower_quantile(1.0 - p);
}

double normal_upper_quantile(double q) {
  require_open_unit(q, "normal_upper_quantile");
  if (q <= 0.5) return -lower_quantile(q);
  return lower_quantile(1.0 - q);
}

double normal_upper_quantile_log(double neg_log_q) {
  if (!(neg_log_q > 0.0) || !std::isfinite(neg_log_q)) {
    throw DomainError("normal_upper_quantile_log: argument must be positive and finite");
  }
  if (neg_log_q <= 700.0) {
    const double q = std::exp(-neg_log_q);
    if (q <= 0.5) return -lower_quantile(q);
    return lower_quantile(-std::expm1(-neg_log_q));
  }
  // Newton on log(1 - Phi(x)) = -neg_log_q; d/dx log(1 - Phi(x)) = -1 / mills_ratio.
  double x = std::sqrt(2.0 * neg_log_q - std::log(4.0 * M_PI * neg_log_q));
  for (int it = 0; it < 8; ++it) {
    double mills = 0.0;
    const double f = log_upper_tail_asymptotic(x, &mills) + neg_log_q;
    const double dx = f * mills;
    x += dx;
    if (std::abs(dx) <= 1e-15 * x) break;
  }
  return x;
}

}  // namespace fwerlim
