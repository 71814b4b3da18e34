#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fwerlim/gaussian_model.hpp"
#include "fwerlim/procedures.hpp"

namespace fwerlim {

enum class Metric { FWER, FDR, AnyPwr, RejectAny };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

/// R = V + S: rejections split into false (true-null) and true (false-null) ones.
struct DecisionSummary {
  std::size_t rejected = 0;
  std::size_t false_rejections = 0;
  std::size_t true_rejections = 0;

  bool operator==(const DecisionSummary&) const = default;
};

DecisionSummary summarize(const RejectionSet& decisions, const HypothesisConfig& config);

/// Per-replicate value of a metric: 1{V >= 1}, V / max(R, 1), 1{S >= 1} or 1{R >= 1}.
double metric_value(Metric metric, const DecisionSummary& summary);

/// Mean over replicates with a 95% normal-approximation interval clamped to [0, 1].
struct MonteCarloEstimate {
  Metric metric = Metric::FWER;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

/// Worker threads used when a call passes threads == 0: $FWERLIM_THREADS if
/// set, otherwise the hardware concurrency.
unsigned default_thread_count();

/// Smallest replicate count estimate() accepts.
inline constexpr std::size_t kMinReplicates = 100;
inline constexpr std::size_t kDefaultReplicates = 100000;

/// Monte Carlo estimate of `metric` for one procedure. Replicate r draws from
/// stream (seed, r), so the result does not depend on `threads`.
MonteCarloEstimate estimate(const Procedure& procedure, const HypothesisConfig& config,
                            Metric metric, std::size_t replicates, std::uint64_t seed,
                            unsigned threads = 0);

/// Same as estimate() for several procedures evaluated on one shared replicate
/// stream (common random numbers).
std::vector<MonteCarloEstimate> estimate_many(std::span<const Procedure> procedures,
                                              const HypothesisConfig& config, Metric metric,
                                              std::size_t replicates, std::uint64_t seed,
                                              unsigned threads = 0);

/// Sequentially replays replicates 0..replicates-1 of the stream used by
/// estimate_many and hands the per-procedure summaries to `visit`.
void simulate(std::span<const Procedure> procedures, const HypothesisConfig& config,
              std::size_t replicates, std::uint64_t seed,
              const std::function<void(std::size_t, std::span<const DecisionSummary>)>& visit);

/// Mean configuration of a sweep cell: either a fixed count of false nulls or a
/// fraction of n (rounded down), all carrying mean `mu`.
struct MeanSpec {
  std::optional<std::size_t> n_false;
  std::optional<double> false_fraction;
  double mu = 0.0;

  static MeanSpec global_null() { return MeanSpec{std::size_t{0}, std::nullopt, 0.0}; }
  std::size_t resolve(std::size_t n) const;
};

struct SweepGrid {
  std::vector<std::size_t> n;
  std::vector<double> rho;
  std::vector<double> alpha;
  std::vector<MeanSpec> means{MeanSpec::global_null()};

  std::size_t cell_count() const { return n.size() * rho.size() * alpha.size() * means.size(); }
};

/// One (cell, procedure) result. `error` is non-empty when the cell could not
/// be evaluated; the numeric fields are then meaningless.
struct SweepRow {
  std::string procedure;
  Metric metric = Metric::FWER;
  std::size_t n = 0;
  double rho = 0.0;
  double alpha = 0.0;
  std::size_t n_false = 0;
  double mu = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  MonteCarloEstimate result;
  /// Known limiting value (lo == hi) or window as n grows, when one exists.
  std::optional<std::pair<double, double>> reference_limit;
  /// Limiting-FDR ceiling for step-up rules satisfying the BH-optimality bound.
  std::optional<double> class_bound;
  std::string error;
};

/// For an equicorrelated global null (metric other than AnyPwr) fills
/// reference_limit and, for step-up rules whose cutoffs pass the BH-optimality
/// check, class_bound. Uses row.alpha and row.metric.
void annotate_limits(SweepRow& row, const Procedure& procedure, const HypothesisConfig& config);

/// Seed of grid cell `cell` in a sweep seeded with `seed`.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t cell);

/// Estimates every procedure in every cell of the cartesian grid
/// n x rho x alpha x means (n varying slowest). Rows come out in grid order,
/// procedures in the order given; procedures share the cell's replicates.
std::vector<SweepRow> sweep(std::span<const std::string> procedures, Metric metric,
                            const SweepGrid& grid, std::size_t replicates, std::uint64_t seed,
                            unsigned threads = 0);

}  // namespace fwerlim
