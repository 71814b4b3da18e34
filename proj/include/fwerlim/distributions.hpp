#pragma once

namespace fwerlim {

// Standard normal distribution. All functions are pure and thread-safe.
// Non-finite arguments raise DomainError.

/// Phi(x).
double normal_cdf(double x);

/// 1 - Phi(x), evaluated without cancellation in the upper tail.
double normal_sf(double x);

/// Phi^{-1}(p) for 0 < p < 1. Subnormal p still yields a finite value.
double normal_quantile(double p);

/// Phi^{-1}(1 - q) for 0 < q < 1, accurate for tiny q where 1 - q would round to 1.
double normal_upper_quantile(double q);

/// Phi^{-1}(1 - exp(-neg_log_q)) for neg_log_q > 0.
///
/// Works far beyond the double range of q itself (neg_log_q in the thousands),
/// which the limiting-FDR objective needs when its infimum sits at t ~ 1e-300.
double normal_upper_quantile_log(double neg_log_q);

}  // namespace fwerlim
