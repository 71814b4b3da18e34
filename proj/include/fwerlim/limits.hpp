#pragma once

#include <cstddef>
#include <optional>

#include "fwerlim/procedures.hpp"

namespace fwerlim {

/// Limiting BH FDR under the global null of M_n(rho), as n grows:
///   1 - Phi(inf_{t in (0,1)} s(t)),
///   s(t) = [Phi^{-1}(1 - t alpha) - sqrt(1 - rho) Phi^{-1}(1 - t)] / sqrt(rho).
struct LimitResult {
  double value = 0.0;
  /// Absent at the analytic boundary cases rho = 0 and rho = 1.
  std::optional<double> minimizer_t;
  double objective_at_minimizer = 0.0;
  std::size_t grid_points = 0;
  double refinement_tolerance = 0.0;
};

struct LimitOptions {
  std::size_t grid_points = 10000;
  /// Width of the final golden-section bracket, measured in t.
  double tolerance = 1e-10;
};

/// s(t) for t, alpha, rho strictly inside (0, 1).
double s_objective(double t, double alpha, double rho);

/// Minimizes s over a symmetric logit-spaced mesh of t, then refines the best
/// grid bracket by golden-section search. rho within 1e-12 of 0 or 1 returns
/// alpha exactly.
LimitResult limiting_bh_fdr(double alpha, double rho, const LimitOptions& options = {});

/// Ceiling on the limiting FDR of any step-up rule whose cutoffs satisfy
/// u_k <= k alpha / n. Numerically the same quantity as limiting_bh_fdr.
double stepup_class_bound(double alpha, double rho, const LimitOptions& options = {});

/// Closed interval [low, high]; a point when low == high.
struct ReferenceLimit {
  double low = 0.0;
  double high = 0.0;

  bool is_point() const { return low == high; }
};

/// Global-null limit of FWER as n grows, under M_n(rho) with rho in [0, 1).
///
///   rho = 0: Bonferroni, Holm, Hommel -> 1 - e^{-alpha}; Hochberg -> [1 - e^{-alpha}, alpha];
///            Sidak -> alpha; BH -> alpha; Benjamini-Liu -> 1 - e^{-q} (BL1) or q (BL2, BL3).
///   rho > 0: every step-down rule -> 0; Hochberg (alpha < 1/2) and Hommel -> 0;
///            BH -> limiting_bh_fdr(alpha, rho).
///
/// Custom cutoff vectors have no reference value (UsageError).
ReferenceLimit reference_limit(const Procedure& procedure, double rho);

}  // namespace fwerlim
