#include "fwerlim/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fwerlim/errors.hpp"

namespace fwerlim {
namespace {

void require_level(double level, const char* what) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError(std::string(what) + ": level must lie in (0, 1), got " +
                      std::to_string(level));
  }
}

// Slack above alpha inside which a p-value can still flip a literal
// comparison against k * alpha / i after rounding.
constexpr double kHommelCapSlack = 1e-12;

// Rank whose cutoff bounds the first tail a step-down rule is tried on.
constexpr std::size_t kStepDownWorkingRank = 16;

// Literal check of "P_(n-i+k) > k * alpha / i for k = 1..i" against a sorted
// prefix of the p-values. Entries past the prefix exceed the cap and pass.
bool hommel_condition(std::span<const double> q, std::size_t n, double alpha, std::size_t i) {
  const std::size_t first_rank = n - i + 1;
  for (std::size_t r = first_rank; r <= q.size(); ++r) {
    const std::size_t k = r - (n - i);
    if (!(q[r - 1] > static_cast<double>(k) * alpha / static_cast<double>(i))) return false;
  }
  return true;
}

std::size_t hommel_index_literal(std::span<const double> q, std::size_t n, double alpha) {
  for (std::size_t i = n; i >= 1; --i) {
    if (i + q.size() <= n) return i;  // no rank of the prefix is active
    if (hommel_condition(q, n, alpha, i)) return i;
  }
  return 0;
}

// j = max{i : P_(n-i+k) > k alpha / i for all k <= i}, 0 when the set is empty.
//
// Rank r (with d = n - r larger p-values above it) is violated at size i exactly
// when i >= d + 1 and i (alpha - P_(r)) >= d alpha. Once violated it stays
// violated for larger i, so the admissible sizes form a prefix {1..j} and j is
// one below the smallest violating size over all ranks. Rounding can only
// disagree with the literal comparison when P_(r) sits within a few ulps of
// some k alpha / i; those inputs take the literal scan instead.
std::size_t hommel_index(std::span<const double> q, std::size_t n, double alpha) {
  const double cap = alpha * (1.0 + kHommelCapSlack);
  const double tie_tol = 64.0 * std::numeric_limits<double>::epsilon() * alpha;
  std::size_t first_violation = n + 1;
  bool near_tie = false;

  for (std::size_t r = 1; r <= q.size(); ++r) {
    const double p = q[r - 1];
    if (p > cap) break;
    const std::size_t d = n - r;
    if (d == 0) {
      if (std::abs(p - alpha) <= tie_tol) {
        near_tie = true;
      } else if (p < alpha) {
        first_violation = 1;
      }
      continue;
    }
    if (p >= alpha) continue;

    const double dd = static_cast<double>(d);
    const double crossing = dd * alpha / (alpha - p);
    if (crossing > static_cast<double>(n) + 1.0) continue;
    const double lo = std::floor(crossing);
    for (double i : {lo, lo + 1.0}) {
      if (i >= dd + 1.0 && i <= static_cast<double>(n) &&
          std::abs(p - (i - dd) * alpha / i) <= tie_tol) {
        near_tie = true;
      }
    }
    const auto violation = static_cast<std::size_t>(std::max(dd + 1.0, std::ceil(crossing)));
    first_violation = std::min(first_violation, violation);
  }

  if (near_tie) return hommel_index_literal(q, n, alpha);
  return std::min(first_violation, n + 1) - 1;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Bonferroni: return "bonferroni";
    case Family::Sidak: return "sidak";
    case Family::Holm: return "holm";
    case Family::BenjaminiLiu1: return "bl1";
    case Family::BenjaminiLiu2: return "bl2";
    case Family::BenjaminiLiu3: return "bl3";
    case Family::Hochberg: return "hochberg";
    case Family::BenjaminiHochberg: return "bh";
    case Family::Custom: return "custom";
  }
  return "unknown";
}

std::string_view to_string(Direction direction) {
  return direction == Direction::StepDown ? "stepdown" : "stepup";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::Bonferroni, Family::Sidak, Family::Holm, Family::BenjaminiLiu1,
                   Family::BenjaminiLiu2, Family::BenjaminiLiu3, Family::Hochberg,
                   Family::BenjaminiHochberg, Family::Custom}) {
    if (to_string(f) == name) return f;
  }
  throw UsageError("unknown critical-value family '" + std::string(name) + "'");
}

Direction default_direction(Family family) {
  switch (family) {
    case Family::Hochberg:
    case Family::BenjaminiHochberg: return Direction::StepUp;
    default: return Direction::StepDown;
  }
}

PValueVector::PValueVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw UsageError("p-value vector must not be empty");
  for (double p : values_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("p-value outside [0, 1]: " + std::to_string(p));
    }
  }
}

CriticalValues::CriticalValues(std::vector<double> values, Family family, double level)
    : values_(std::move(values)), family_(family), level_(level) {
  if (values_.empty()) throw DomainError("critical-value vector must not be empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double u = values_[i];
    if (!(u >= 0.0 && u <= 1.0)) {
      throw DomainError("critical value u_" + std::to_string(i + 1) + " outside [0, 1]");
    }
    if (i > 0 && u < values_[i - 1]) {
      throw DomainError("critical values must be nondecreasing (u_" + std::to_string(i + 1) +
                        " < u_" + std::to_string(i) + ")");
    }
  }
}

bool RejectionSet::is_subset_of(const RejectionSet& other) const {
  if (rejected.size() != other.rejected.size()) return false;
  for (std::size_t i = 0; i < rejected.size(); ++i) {
    if (rejected[i] && !other.rejected[i]) return false;
  }
  return true;
}

CriticalValues make_critical_values(Family family, std::size_t n, double level) {
  if (n == 0) throw DomainError("make_critical_values: n must be positive");
  require_level(level, "make_critical_values");
  if (family == Family::Custom) {
    throw UsageError("make_critical_values: custom cutoffs must be supplied explicitly");
  }

  const double nd = static_cast<double>(n);
  // 1 - (1 - x)^(1/k), exact at k = 1.
  const auto root_complement = [](double x, double k) {
    return k == 1.0 ? x : -std::expm1(std::log1p(-x) / k);
  };
  std::vector<double> u(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double m = static_cast<double>(n - i + 1);
    double v = 0.0;
    switch (family) {
      case Family::Bonferroni: v = level / nd; break;
      case Family::Sidak: v = root_complement(level, nd); break;
      case Family::Holm:
      case Family::Hochberg: v = level / m; break;
      case Family::BenjaminiHochberg: v = static_cast<double>(i) * level / nd; break;
      case Family::BenjaminiLiu1: v = std::min(1.0, nd * level / (m * m)); break;
      case Family::BenjaminiLiu2: {
        const double inner = std::min(1.0, nd * level / m);
        v = inner >= 1.0 ? 1.0 : root_complement(inner, m);
        break;
      }
      case Family::BenjaminiLiu3: v = root_complement(level, m); break;
      case Family::Custom: break;
    }
    u[i - 1] = std::clamp(v, 0.0, 1.0);
  }
  return CriticalValues(std::move(u), family, level);
}

RejectionSet step_down(const PValueVector& p, const CriticalValues& u) {
  if (p.size() != u.size()) {
    throw UsageError("step_down: p-value and cutoff lengths differ");
  }
  return BoundProcedure(Procedure::custom(u, Direction::StepDown), p.size()).apply(p);
}

RejectionSet step_up(const PValueVector& p, const CriticalValues& u) {
  if (p.size() != u.size()) {
    throw UsageError("step_up: p-value and cutoff lengths differ");
  }
  return BoundProcedure(Procedure::custom(u, Direction::StepUp), p.size()).apply(p);
}

RejectionSet hommel(const PValueVector& p, double alpha) {
  return BoundProcedure(Procedure::hommel(alpha), p.size()).apply(p);
}

std::vector<CutoffViolation> validate_fwer_cutoffs(const CriticalValues& u, double alpha,
                                                   Direction kind) {
  std::vector<CutoffViolation> out;
  const std::size_t n = u.size();
  for (std::size_t i = 1; i <= n; ++i) {
    const double bound = kind == Direction::StepDown
                             ? alpha / static_cast<double>(n - i + 1)
                             : static_cast<double>(i) * alpha / static_cast<double>(n);
    if (u[i - 1] > bound) out.push_back({i, u[i - 1], bound});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Procedure

Procedure Procedure::stepwise(Family family, double level) {
  return stepwise(family, default_direction(family), level);
}

Procedure Procedure::stepwise(Family family, Direction direction, double level) {
  if (family == Family::Custom) {
    throw UsageError("Procedure::stepwise: use Procedure::custom for explicit cutoffs");
  }
  require_level(level, "Procedure::stepwise");
  Procedure proc;
  proc.kind_ = Kind::Stepwise;
  proc.family_ = family;
  proc.direction_ = direction;
  proc.level_ = level;
  return proc;
}

Procedure Procedure::custom(CriticalValues u, Direction direction) {
  Procedure proc;
  proc.kind_ = Kind::Stepwise;
  proc.family_ = Family::Custom;
  proc.direction_ = direction;
  proc.level_ = u.level();
  proc.custom_ = std::move(u);
  return proc;
}

Procedure Procedure::hommel(double alpha) {
  require_level(alpha, "hommel");
  Procedure proc;
  proc.kind_ = Kind::Hommel;
  proc.level_ = alpha;
  return proc;
}

Procedure Procedure::from_name(std::string_view name, double level) {
  if (name == "hommel") return hommel(level);
  const Family family = parse_family(name);
  if (family == Family::Custom) {
    throw UsageError("procedure 'custom' needs an explicit cutoff vector");
  }
  return stepwise(family, level);
}

std::string Procedure::name() const {
  if (kind_ == Kind::Hommel) return "hommel";
  std::string out(to_string(family_));
  if (family_ == Family::Custom || direction_ != default_direction(family_)) {
    out += "-";
    out += to_string(direction_);
  }
  return out;
}

CriticalValues Procedure::critical_values(std::size_t n) const {
  if (kind_ == Kind::Hommel) {
    throw UsageError("Hommel's procedure has no critical-value vector");
  }
  if (custom_) {
    if (custom_->size() != n) {
      throw UsageError("custom cutoffs have length " + std::to_string(custom_->size()) +
                       " but the problem has n = " + std::to_string(n));
    }
    return *custom_;
  }
  return make_critical_values(family_, n, level_);
}

RejectionSet Procedure::apply(const PValueVector& p) const {
  return BoundProcedure(*this, p.size()).apply(p);
}

// ---------------------------------------------------------------------------
// BoundProcedure

BoundProcedure::BoundProcedure(const Procedure& procedure, std::size_t n)
    : procedure_(procedure), n_(n) {
  if (n == 0) throw UsageError("procedure bound to an empty problem");
  if (procedure_.kind() == Procedure::Kind::Hommel) {
    tail_cap_ = std::min(1.0, procedure_.level() * (1.0 + kHommelCapSlack));
    working_cap_ = tail_cap_;
    return;
  }
  const CriticalValues u = procedure_.critical_values(n);
  cutoffs_.assign(u.values().begin(), u.values().end());
  tail_cap_ = cutoffs_.back();
  working_cap_ = procedure_.direction() == Direction::StepDown
                     ? cutoffs_[std::min<std::size_t>(n, kStepDownWorkingRank) - 1]
                     : tail_cap_;
}

std::optional<TailDecision> BoundProcedure::decide(std::span<const double> sorted_tail,
                                                   double covered_cap) const {
  const std::size_t s = std::min(sorted_tail.size(), n_);
  const auto q = sorted_tail.first(s);
  const bool complete = s == n_;

  if (procedure_.kind() == Procedure::Kind::Hommel) {
    if (!complete && covered_cap < tail_cap_) return std::nullopt;
    const std::size_t j = hommel_index(q, n_, procedure_.level());
    if (j == 0) return TailDecision{1.0};
    return TailDecision{procedure_.level() / static_cast<double>(j)};
  }

  std::size_t m = 0;
  if (procedure_.direction() == Direction::StepDown) {
    while (m < s && q[m] <= cutoffs_[m]) ++m;
    // The chain reached past the tail: P_(s+1) > covered_cap must also fail u_{s+1}.
    if (m == s && !complete && cutoffs_[s] > covered_cap) return std::nullopt;
  } else {
    if (!complete && cutoffs_.back() > covered_cap) return std::nullopt;
    for (std::size_t i = s; i >= 1; --i) {
      if (q[i - 1] <= cutoffs_[i - 1]) {
        m = i;
        break;
      }
    }
  }
  if (m == 0) return TailDecision{};
  // Deciding by value keeps tied p-values together.
  return TailDecision{q[m - 1]};
}

RejectionSet BoundProcedure::apply(const PValueVector& p) const {
  if (p.size() != n_) {
    throw UsageError("procedure bound to n = " + std::to_string(n_) + " applied to " +
                     std::to_string(p.size()) + " p-values");
  }
  std::vector<double> tail;
  for (double v : p.values()) {
    if (v <= tail_cap_) tail.push_back(v);
  }
  std::sort(tail.begin(), tail.end());

  RejectionSet out;
  out.rejected.assign(n_, false);
  const auto tau = decide(tail, tail_cap_)->threshold;
  if (!tau) return out;
  for (std::size_t i = 0; i < n_; ++i) {
    if (p[i] <= *tau) {
      out.rejected[i] = true;
      ++out.count;
    }
  }
  return out;
}

}  // namespace fwerlim
