#include "fwerlim/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "fwerlim/distributions.hpp"
#include "fwerlim/errors.hpp"
#include "fwerlim/limits.hpp"

namespace fwerlim {
namespace {

constexpr double kZ975 = 1.959963984540054;
constexpr std::size_t kBlockSize = 256;

// Lower end of the statistics whose p-value can be <= cap. The margin absorbs
// quantile error; candidates are re-checked against the p-value itself.
double statistic_cut(double cap) {
  if (cap >= 1.0) return -std::numeric_limits<double>::infinity();
  if (cap <= 0.0) return 37.0;  // sf underflows to 0 only beyond ~38.5
  const double x = normal_upper_quantile(cap);
  return x - 1e-7 * std::max(1.0, std::abs(x));
}

// Per-replicate evaluation of several procedures on one draw of X.
class ReplicateEvaluator {
 public:
  ReplicateEvaluator(std::span<const Procedure> procedures, const HypothesisConfig& config)
      : sampler_(config), x_(config.n()) {
    bound_.reserve(procedures.size());
    double working = 0.0;
    double full = 0.0;
    for (const auto& proc : procedures) {
      bound_.emplace_back(proc, config.n());
      working = std::max(working, bound_.back().working_cap());
      full = std::max(full, bound_.back().tail_cap());
    }
    working_cap_ = working;
    full_cap_ = full;
    working_cut_ = statistic_cut(working_cap_);
    full_cut_ = statistic_cut(full_cap_);
    summaries_.resize(bound_.size());
  }

  std::span<const DecisionSummary> run(std::uint64_t seed, std::size_t replicate) {
    auto rng = Xoshiro256pp::for_stream(seed, replicate);
    sampler_.sample_statistics(rng, x_);

    build_tail(working_cap_, working_cut_);
    bool widened = false;
    for (std::size_t k = 0; k < bound_.size(); ++k) {
      auto decision = bound_[k].decide(tail_p_, working_cap_);
      if (!decision) {
        if (!widened) {
          build_tail(full_cap_, full_cut_);
          widened = true;
        }
        decision = bound_[k].decide(tail_p_, full_cap_);
      }
      summaries_[k] = count(decision->threshold);
    }
    return summaries_;
  }

 private:
  void build_tail(double cap, double cut) {
    entries_.clear();
    const auto mu = sampler_.config().mu();
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (x_[i] < cut) continue;
      const double p = normal_sf(x_[i]);
      if (p <= cap) entries_.push_back({p, mu[i] == 0.0});
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.p < b.p; });
    tail_p_.resize(entries_.size());
    nulls_before_.resize(entries_.size() + 1);
    nulls_before_[0] = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      tail_p_[i] = entries_[i].p;
      nulls_before_[i + 1] = nulls_before_[i] + (entries_[i].is_null ? 1 : 0);
    }
  }

  DecisionSummary count(std::optional<double> threshold) const {
    DecisionSummary out;
    if (!threshold) return out;
    const auto& config = sampler_.config();
    if (*threshold >= 1.0) {
      out.rejected = config.n();
      out.false_rejections = config.null_count();
    } else {
      const auto end = std::upper_bound(tail_p_.begin(), tail_p_.end(), *threshold);
      const auto r = static_cast<std::size_t>(end - tail_p_.begin());
      out.rejected = r;
      out.false_rejections = nulls_before_[r];
    }
    out.true_rejections = out.rejected - out.false_rejections;
    return out;
  }

  struct Entry {
    double p;
    bool is_null;
  };

  GaussianSampler sampler_;
  std::vector<BoundProcedure> bound_;
  std::vector<double> x_;
  double working_cap_ = 0.0;
  double full_cap_ = 0.0;
  double working_cut_ = 0.0;
  double full_cut_ = 0.0;
  std::vector<Entry> entries_;
  std::vector<double> tail_p_;
  std::vector<std::size_t> nulls_before_;
  std::vector<DecisionSummary> summaries_;
};

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

MonteCarloEstimate finish(Metric metric, const Moments& m, std::size_t replicates,
                          std::uint64_t seed) {
  MonteCarloEstimate out;
  out.metric = metric;
  out.replicates = replicates;
  out.seed = seed;
  const double n = static_cast<double>(replicates);
  out.estimate = m.sum / n;
  const double var = std::max(0.0, (m.sum_sq - m.sum * out.estimate) / (n - 1.0));
  out.std_error = std::sqrt(var / n);
  out.ci_low = std::clamp(out.estimate - kZ975 * out.std_error, 0.0, 1.0);
  out.ci_high = std::clamp(out.estimate + kZ975 * out.std_error, 0.0, 1.0);
  return out;
}

}  // namespace

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::FWER: return "fwer";
    case Metric::FDR: return "fdr";
    case Metric::AnyPwr: return "anypwr";
    case Metric::RejectAny: return "rejectany";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : {Metric::FWER, Metric::FDR, Metric::AnyPwr, Metric::RejectAny}) {
    if (to_string(m) == name) return m;
  }
  throw UsageError("unknown metric '" + std::string(name) + "' (fwer, fdr, anypwr, rejectany)");
}

DecisionSummary summarize(const RejectionSet& decisions, const HypothesisConfig& config) {
  if (decisions.rejected.size() != config.n()) {
    throw UsageError("summarize: rejection set and configuration lengths differ");
  }
  DecisionSummary out;
  for (std::size_t i = 0; i < config.n(); ++i) {
    if (!decisions.rejected[i]) continue;
    ++out.rejected;
    if (config.is_null(i)) {
      ++out.false_rejections;
    } else {
      ++out.true_rejections;
    }
  }
  return out;
}

double metric_value(Metric metric, const DecisionSummary& s) {
  switch (metric) {
    case Metric::FWER: return s.false_rejections >= 1 ? 1.0 : 0.0;
    case Metric::FDR:
      return static_cast<double>(s.false_rejections) /
             static_cast<double>(std::max<std::size_t>(s.rejected, 1));
    case Metric::AnyPwr: return s.true_rejections >= 1 ? 1.0 : 0.0;
    case Metric::RejectAny: return s.rejected >= 1 ? 1.0 : 0.0;
  }
  return 0.0;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("FWERLIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void simulate(std::span<const Procedure> procedures, const HypothesisConfig& config,
              std::size_t replicates, std::uint64_t seed,
              const std::function<void(std::size_t, std::span<const DecisionSummary>)>& visit) {
  if (procedures.empty()) throw UsageError("simulate: no procedures given");
  ReplicateEvaluator evaluator(procedures, config);
  for (std::size_t r = 0; r < replicates; ++r) visit(r, evaluator.run(seed, r));
}

std::vector<MonteCarloEstimate> estimate_many(std::span<const Procedure> procedures,
                                              const HypothesisConfig& config, Metric metric,
                                              std::size_t replicates, std::uint64_t seed,
                                              unsigned threads) {
  if (procedures.empty()) throw UsageError("estimate: no procedures given");
  if (replicates < kMinReplicates) {
    throw UsageError("estimate: need at least " + std::to_string(kMinReplicates) +
                     " replicates, got " + std::to_string(replicates));
  }
  // Binding validates procedure/config compatibility before any thread starts.
  for (const auto& proc : procedures) BoundProcedure(proc, config.n());
  if (threads == 0) threads = default_thread_count();

  const std::size_t k = procedures.size();
  const std::size_t blocks = (replicates + kBlockSize - 1) / kBlockSize;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  // Block partial sums are combined in block order, so the result is
  // bit-identical for any thread count.
  std::vector<Moments> partial(blocks * k);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    ReplicateEvaluator evaluator(procedures, config);
    for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
      const std::size_t end = std::min(replicates, (b + 1) * kBlockSize);
      Moments* acc = &partial[b * k];
      for (std::size_t r = b * kBlockSize; r < end; ++r) {
        const auto summaries = evaluator.run(seed, r);
        for (std::size_t j = 0; j < k; ++j) {
          const double v = metric_value(metric, summaries[j]);
          acc[j].sum += v;
          acc[j].sum_sq += v * v;
        }
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<MonteCarloEstimate> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Moments total;
    for (std::size_t b = 0; b < blocks; ++b) {
      total.sum += partial[b * k + j].sum;
      total.sum_sq += partial[b * k + j].sum_sq;
    }
    out.push_back(finish(metric, total, replicates, seed));
  }
  return out;
}

MonteCarloEstimate estimate(const Procedure& procedure, const HypothesisConfig& config,
                            Metric metric, std::size_t replicates, std::uint64_t seed,
                            unsigned threads) {
  return estimate_many(std::span(&procedure, 1), config, metric, replicates, seed, threads)[0];
}

std::size_t MeanSpec::resolve(std::size_t n) const {
  if (false_fraction) {
    if (!(*false_fraction >= 0.0 && *false_fraction <= 1.0)) {
      throw DomainError("false-null fraction must lie in [0, 1]");
    }
    return static_cast<std::size_t>(std::floor(*false_fraction * static_cast<double>(n)));
  }
  return n_false.value_or(0);
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t cell) {
  return splitmix64(seed ^ splitmix64(0xc3a5c85c97cb3127ULL + cell));
}

void annotate_limits(SweepRow& row, const Procedure& procedure, const HypothesisConfig& config) {
  // Both annotations are global-null limits, where FWER, FDR and RejectAny coincide.
  const auto& model = config.model();
  if (!model.is_equicorrelated() || !config.is_global_null() || row.metric == Metric::AnyPwr) {
    return;
  }
  const double rho = model.rho();
  try {
    const auto ref = reference_limit(procedure, rho);
    row.reference_limit = std::pair{ref.low, ref.high};
  } catch (const std::exception&) {
    // no tabulated limit for this procedure at this (alpha, rho)
  }
  if (procedure.kind() == Procedure::Kind::Stepwise &&
      procedure.direction() == Direction::StepUp &&
      validate_fwer_cutoffs(procedure.critical_values(config.n()), row.alpha, Direction::StepUp)
          .empty()) {
    row.class_bound = stepup_class_bound(row.alpha, rho);
  }
}

std::vector<SweepRow> sweep(std::span<const std::string> procedures, Metric metric,
                            const SweepGrid& grid, std::size_t replicates, std::uint64_t seed,
                            unsigned threads) {
  if (procedures.empty()) throw UsageError("sweep: no procedures given");
  if (grid.cell_count() == 0) throw UsageError("sweep: empty grid");

  std::vector<SweepRow> rows;
  rows.reserve(grid.cell_count() * procedures.size());
  std::size_t cell = 0;
  for (std::size_t n : grid.n) {
    for (double rho : grid.rho) {
      for (double alpha : grid.alpha) {
        for (const MeanSpec& means : grid.means) {
          const std::uint64_t s = cell_seed(seed, cell++);
          const std::size_t first = rows.size();
          for (const auto& name : procedures) {
            SweepRow row;
            row.procedure = name;
            row.metric = metric;
            row.n = n;
            row.rho = rho;
            row.alpha = alpha;
            row.mu = means.mu;
            row.replicates = replicates;
            row.seed = s;
            rows.push_back(std::move(row));
          }
          const auto cell_rows = std::span(rows).subspan(first);
          try {
            const std::size_t n_false = means.resolve(n);
            for (auto& row : cell_rows) row.n_false = n_false;
            std::vector<Procedure> procs;
            for (const auto& name : procedures) procs.push_back(Procedure::from_name(name, alpha));
            const auto config = HypothesisConfig::with_false_nulls(
                n, n_false, means.mu, CorrelationModel::equicorrelated(rho));
            const auto results = estimate_many(procs, config, metric, replicates, s, threads);
            for (std::size_t j = 0; j < procs.size(); ++j) {
              cell_rows[j].result = results[j];
              annotate_limits(cell_rows[j], procs[j], config);
            }
          } catch (const std::exception& e) {
            for (auto& row : cell_rows) row.error = e.what();
          }
        }
      }
    }
  }
  return rows;
}

}  // namespace fwerlim
