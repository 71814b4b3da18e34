#include "fwerlim/limits.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fwerlim/distributions.hpp"
#include "fwerlim/errors.hpp"

namespace fwerlim {
namespace {

constexpr double kRhoSnap = 1e-12;
// Mesh covers logit(t) in [-kLogitRange, kLogitRange], i.e. t down to ~1e-304.
constexpr double kLogitRange = 700.0;
// sinh stretching: fine near t = 1/2, coarse toward the ends.
constexpr double kMeshStretch = 6.0;

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

// -log(logistic(x)) without overflow.
double neg_log_logistic(double x) {
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// s as a function of L = logit(t).
struct LogitObjective {
  double neg_log_alpha;
  double sqrt_rho;
  double sqrt_one_minus_rho;

  double operator()(double logit_t) const {
    const double neg_log_t = neg_log_logistic(logit_t);
    const double cut = normal_upper_quantile_log(neg_log_t + neg_log_alpha);
    const double order_stat = normal_upper_quantile_log(neg_log_t);
    return (cut - sqrt_one_minus_rho * order_stat) / sqrt_rho;
  }
};

}  // namespace

double s_objective(double t, double alpha, double rho) {
  if (!(t > 0.0 && t < 1.0)) {
    throw DomainError("s(t) is defined for t in (0, 1); s(0) = s(1) = +infinity");
  }
  require_alpha(alpha);
  if (!(rho > 0.0 && rho < 1.0)) {
    throw DomainError("s(t) needs rho in (0, 1), got " + std::to_string(rho));
  }
  const double neg_log_t = -std::log(t);
  const double cut = normal_upper_quantile_log(neg_log_t - std::log(alpha));
  return (cut - std::sqrt(1.0 - rho) * normal_upper_quantile(t)) / std::sqrt(rho);
}

LimitResult limiting_bh_fdr(double alpha, double rho, const LimitOptions& options) {
  require_alpha(alpha);
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw DomainError("rho must lie in [0, 1], got " + std::to_string(rho));
  }
  if (options.grid_points < 3) throw UsageError("limit grid needs at least 3 points");
  if (!(options.tolerance > 0.0)) throw UsageError("refinement tolerance must be positive");

  LimitResult out;
  out.grid_points = options.grid_points;
  out.refinement_tolerance = options.tolerance;
  if (rho <= kRhoSnap || rho >= 1.0 - kRhoSnap) {
    out.value = alpha;
    return out;
  }

  const LogitObjective s{-std::log(alpha), std::sqrt(rho), std::sqrt(1.0 - rho)};

  const std::size_t n = options.grid_points;
  std::vector<double> mesh(n);
  const double scale = kLogitRange / std::sinh(kMeshStretch);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n - 1);
    mesh[k] = scale * std::sinh(kMeshStretch * u);
  }

  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double v = s(mesh[k]);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }

  // Golden-section on the neighbouring cells. dt/dL <= 1/4, so a bracket of
  // width 4 * tolerance in L is at most `tolerance` wide in t.
  double lo = mesh[best == 0 ? 0 : best - 1];
  double hi = mesh[best + 1 == n ? n - 1 : best + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = s(c);
  double fd = s(d);
  double best_logit = mesh[best];
  const double width = 4.0 * options.tolerance;
  for (int it = 0; it < 400 && hi - lo > width; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = s(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = s(d);
    }
  }
  for (double candidate : {0.5 * (lo + hi), c, d}) {
    const double v = s(candidate);
    if (v < best_value) {
      best_value = v;
      best_logit = candidate;
    }
  }

  out.minimizer_t = logistic(best_logit);
  out.objective_at_minimizer = best_value;
  out.value = normal_sf(best_value);
  return out;
}

double stepup_class_bound(double alpha, double rho, const LimitOptions& options) {
  return limiting_bh_fdr(alpha, rho, options).value;
}

ReferenceLimit reference_limit(const Procedure& procedure, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw DomainError("reference limits are tabulated for rho in [0, 1)");
  }
  const double level = procedure.level();
  const bool independent = rho == 0.0;
  const double poisson = -std::expm1(-level);  // 1 - e^{-alpha}

  if (procedure.kind() == Procedure::Kind::Hommel) {
    return independent ? ReferenceLimit{poisson, poisson} : ReferenceLimit{0.0, 0.0};
  }
  switch (procedure.family()) {
    case Family::Custom:
      throw UsageError("no reference limit for a custom cutoff vector");
    case Family::Hochberg:
      if (procedure.direction() != Direction::StepUp) break;
      if (independent) return {poisson, level};
      if (!(level < 0.5)) {
        throw DomainError("Hochberg's zero limit is established only for alpha < 1/2");
      }
      return {0.0, 0.0};
    case Family::BenjaminiHochberg: {
      if (procedure.direction() != Direction::StepUp) break;
      const double v = limiting_bh_fdr(level, rho).value;
      return {v, v};
    }
    default: break;
  }

  if (procedure.direction() != Direction::StepDown) {
    throw UsageError("no reference limit for " + procedure.name());
  }
  if (!independent) return {0.0, 0.0};
  // Under independence a step-down rule rejects anything iff P_(1) <= u_1, so
  // FWER = 1 - (1 - u_1)^n -> 1 - exp(-lim n u_1).
  switch (procedure.family()) {
    case Family::Bonferroni:
    case Family::Holm:
    case Family::BenjaminiLiu1:
    case Family::Hochberg:
      return {poisson, poisson};
    case Family::Sidak:
    case Family::BenjaminiLiu2:
    case Family::BenjaminiLiu3:
      return {level, level};
    default:
      throw UsageError("no reference limit for " + procedure.name());
  }
}

}  // namespace fwerlim
