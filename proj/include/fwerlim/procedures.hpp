#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fwerlim {

/// Critical-value families. Bonferroni, Sidak, Holm and the three
/// Benjamini-Liu families are step-down rules; Hochberg and BH are step-up.
enum class Family {
  Bonferroni,
  Sidak,
  Holm,
  BenjaminiLiu1,
  BenjaminiLiu2,
  BenjaminiLiu3,
  Hochberg,
  BenjaminiHochberg,
  Custom,
};

enum class Direction { StepDown, StepUp };

std::string_view to_string(Family family);
std::string_view to_string(Direction direction);

/// Parses the short names used on the command line ("holm", "bh", "bl2", ...).
Family parse_family(std::string_view name);

/// Direction the family is defined with.
Direction default_direction(Family family);

/// p-values of the n hypotheses, each in [0, 1].
class PValueVector {
 public:
  explicit PValueVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Nondecreasing cutoffs u_1 <= ... <= u_n in [0, 1].
class CriticalValues {
 public:
  /// Accepts any vector in the simplex; throws DomainError otherwise.
  CriticalValues(std::vector<double> values, Family family = Family::Custom,
                 double level = 0.0);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  Family family() const { return family_; }
  /// alpha for the alpha-scaled families, q for the Benjamini-Liu ones, 0 for Custom.
  double level() const { return level_; }

 private:
  std::vector<double> values_;
  Family family_;
  double level_;
};

struct RejectionSet {
  std::vector<bool> rejected;
  std::size_t count = 0;

  bool operator==(const RejectionSet&) const = default;
  /// True when every hypothesis rejected here is also rejected by `other`.
  bool is_subset_of(const RejectionSet& other) const;
};

CriticalValues make_critical_values(Family family, std::size_t n, double level);

RejectionSet step_down(const PValueVector& p, const CriticalValues& u);
RejectionSet step_up(const PValueVector& p, const CriticalValues& u);
RejectionSet hommel(const PValueVector& p, double alpha);

struct CutoffViolation {
  std::size_t index;  // 1-based rank i
  double value;       // u_i
  double bound;       // alpha / (n - i + 1) or i * alpha / n
};

/// Necessary conditions for level-alpha control: u_i <= alpha / (n - i + 1) for
/// step-down FWER, u_i <= i * alpha / n for step-up FDR. Empty result means
/// the condition holds.
std::vector<CutoffViolation> validate_fwer_cutoffs(const CriticalValues& u, double alpha,
                                                   Direction kind);

/// A named decision rule, independent of n until bound to a problem size.
class Procedure {
 public:
  enum class Kind { Stepwise, Hommel };

  /// Family with its default direction ("holm" -> step-down, "bh" -> step-up).
  static Procedure stepwise(Family family, double level);
  static Procedure stepwise(Family family, Direction direction, double level);
  /// Fixed cutoff vector; usable only at n == u.size().
  static Procedure custom(CriticalValues u, Direction direction);
  static Procedure hommel(double alpha);
  /// "bonferroni", "sidak", "holm", "bl1", "bl2", "bl3", "hochberg", "bh", "hommel".
  static Procedure from_name(std::string_view name, double level);

  Kind kind() const { return kind_; }
  Family family() const { return family_; }
  Direction direction() const { return direction_; }
  double level() const { return level_; }
  std::string name() const;

  /// Cutoffs at size n (throws UsageError for Hommel, or Custom at a different n).
  CriticalValues critical_values(std::size_t n) const;

  RejectionSet apply(const PValueVector& p) const;

 private:
  Procedure() = default;

  Kind kind_ = Kind::Stepwise;
  Family family_ = Family::Custom;
  Direction direction_ = Direction::StepDown;
  double level_ = 0.0;
  std::optional<CriticalValues> custom_;
};

/// Outcome of deciding from the small end of the sorted p-values: reject
/// every hypothesis with P_i <= *threshold, or nothing when it is empty.
struct TailDecision {
  std::optional<double> threshold;
};

/// A Procedure prepared for one problem size, deciding from the small end of
/// the sorted p-values only.
///
/// Every rule here rejects exactly {i : P_i <= tau} for a data-dependent tau,
/// and tau is determined by the p-values not exceeding tail_cap(). Callers that
/// can produce that sorted tail cheaply (the Monte Carlo loop) skip the full sort.
class BoundProcedure {
 public:
  BoundProcedure(const Procedure& procedure, std::size_t n);

  std::size_t n() const { return n_; }
  const Procedure& procedure() const { return procedure_; }
  /// A tail holding every p-value <= tail_cap() always suffices.
  double tail_cap() const { return tail_cap_; }
  /// Smaller cap that suffices for most data (step-down rules usually stop early).
  double working_cap() const { return working_cap_; }

  /// `sorted_tail` is ascending and contains every p-value <= covered_cap;
  /// p-values left out all exceed covered_cap. Returns nullopt when the decision
  /// depends on p-values above covered_cap; retry with tail_cap().
  std::optional<TailDecision> decide(std::span<const double> sorted_tail,
                                     double covered_cap) const;

  RejectionSet apply(const PValueVector& p) const;

 private:
  Procedure procedure_;
  std::size_t n_;
  std::vector<double> cutoffs_;
  double tail_cap_;
  double working_cap_;
};

}  // namespace fwerlim
