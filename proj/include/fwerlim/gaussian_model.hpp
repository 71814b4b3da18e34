#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "fwerlim/procedures.hpp"
#include "fwerlim/rng.hpp"

namespace fwerlim {

struct Equicorrelated {
  double rho = 0.0;
};

/// Dense row-major correlation matrix.
struct GeneralCorrelation {
  std::size_t n = 0;
  std::vector<double> entries;

  double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

/// Dependence between the test statistics: M_n(rho) or an arbitrary Sigma_n with
/// nonnegative entries.
class CorrelationModel {
 public:
  /// 0 <= rho < 1; rho = 1 is degenerate and handled analytically elsewhere.
  static CorrelationModel equicorrelated(double rho);
  /// Symmetric, unit diagonal, off-diagonal entries in [0, 1]. Positive
  /// semidefiniteness is checked when a sampler factorizes the matrix.
  static CorrelationModel general(std::size_t n, std::vector<double> entries);

  bool is_equicorrelated() const { return std::holds_alternative<Equicorrelated>(model_); }
  double rho() const;
  const GeneralCorrelation& matrix() const;
  /// Smallest off-diagonal correlation (rho itself for M_n(rho)).
  double min_off_diagonal() const;

 private:
  explicit CorrelationModel(std::variant<Equicorrelated, GeneralCorrelation> m)
      : model_(std::move(m)) {}

  std::variant<Equicorrelated, GeneralCorrelation> model_;
};

/// Means mu_i >= 0 of X_i ~ N(mu_i, 1); mu_i = 0 marks a true null.
class HypothesisConfig {
 public:
  HypothesisConfig(std::vector<double> mu, CorrelationModel model);

  /// First `n_false` coordinates carry mean `mu`, the rest are true nulls.
  static HypothesisConfig with_false_nulls(std::size_t n, std::size_t n_false, double mu,
                                           CorrelationModel model);
  static HypothesisConfig global_null(std::size_t n, CorrelationModel model) {
    return with_false_nulls(n, 0, 0.0, std::move(model));
  }

  std::size_t n() const { return mu_.size(); }
  std::span<const double> mu() const { return mu_; }
  const CorrelationModel& model() const { return model_; }
  bool is_null(std::size_t i) const { return mu_[i] == 0.0; }
  std::size_t null_count() const { return null_count_; }
  std::size_t false_count() const { return n() - null_count_; }
  bool is_global_null() const { return null_count_ == n(); }
  double max_mean() const;

 private:
  std::vector<double> mu_;
  CorrelationModel model_;
  std::size_t null_count_ = 0;
};

struct Replicate {
  std::vector<double> x;
  PValueVector p;
};

/// One-sided p-values 1 - Phi(x_i).
PValueVector pvalues(std::span<const double> x);

/// Lower Cholesky factor (row-major) of a correlation matrix. A failed pivot
/// gets one retry with 1e-10 added to the diagonal; if that fails too a
/// ModelError names the offending leading minor.
std::vector<double> correlation_cholesky(const GeneralCorrelation& sigma);

/// Draws replicates of X for a fixed configuration. The equicorrelated case
/// uses X_i = mu_i + theta + Z_i with theta ~ N(0, rho), Z_i ~ N(0, 1 - rho)
/// (O(n) per draw); a general matrix is factorized once and costs O(n^2).
class GaussianSampler {
 public:
  explicit GaussianSampler(HypothesisConfig config);

  const HypothesisConfig& config() const { return config_; }

  /// Writes one draw of X into `x` (length n).
  void sample_statistics(Xoshiro256pp& rng, std::span<double> x) const;
  Replicate sample(Xoshiro256pp& rng) const;

 private:
  HypothesisConfig config_;
  std::vector<double> factor_;  // empty for the equicorrelated fast path
};

Replicate sample_equicorrelated(const HypothesisConfig& config, Xoshiro256pp& rng);
Replicate sample_general(const HypothesisConfig& config, Xoshiro256pp& rng);

}  // namespace fwerlim
