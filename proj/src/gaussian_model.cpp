#include "fwerlim/gaussian_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "fwerlim/distributions.hpp"
#include "fwerlim/errors.hpp"

namespace fwerlim {
namespace {

constexpr double kJitter = 1e-10;

// Returns 0 on success, otherwise the 1-based order of the failing leading minor.
std::size_t try_cholesky(const GeneralCorrelation& sigma, double jitter,
                         std::vector<double>& factor) {
  const std::size_t n = sigma.n;
  factor.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = sigma(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) diag -= factor[j * n + k] * factor[j * n + k];
    if (!(diag > 0.0)) return j + 1;
    const double pivot = std::sqrt(diag);
    factor[j * n + j] = pivot;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = sigma(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= factor[i * n + k] * factor[j * n + k];
      factor[i * n + j] = v / pivot;
    }
  }
  return 0;
}

}  // namespace

CorrelationModel CorrelationModel::equicorrelated(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw DomainError("equicorrelation rho must lie in [0, 1), got " + std::to_string(rho));
  }
  return CorrelationModel(Equicorrelated{rho});
}

CorrelationModel CorrelationModel::general(std::size_t n, std::vector<double> entries) {
  if (n == 0) throw UsageError("correlation matrix must be at least 1x1");
  if (entries.size() != n * n) {
    throw UsageError("correlation matrix needs " + std::to_string(n * n) + " entries, got " +
                     std::to_string(entries.size()));
  }
  GeneralCorrelation m{n, std::move(entries)};
  for (std::size_t i = 0; i < n; ++i) {
    if (m(i, i) != 1.0) {
      throw ModelError("correlation matrix diagonal entry " + std::to_string(i + 1) +
                       " is not 1");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v != m(j, i)) {
        throw ModelError("correlation matrix is not symmetric at (" + std::to_string(i + 1) +
                         ", " + std::to_string(j + 1) + ")");
      }
      if (v < 0.0 || v > 1.0) {
        throw ModelError("correlation entry (" + std::to_string(i + 1) + ", " +
                         std::to_string(j + 1) + ") outside [0, 1]");
      }
    }
  }
  return CorrelationModel(std::move(m));
}

double CorrelationModel::rho() const {
  if (const auto* e = std::get_if<Equicorrelated>(&model_)) return e->rho;
  throw UsageError("rho requested from a general correlation model");
}

const GeneralCorrelation& CorrelationModel::matrix() const {
  if (const auto* g = std::get_if<GeneralCorrelation>(&model_)) return *g;
  throw UsageError("matrix requested from an equicorrelated model");
}

double CorrelationModel::min_off_diagonal() const {
  if (const auto* e = std::get_if<Equicorrelated>(&model_)) return e->rho;
  const auto& m = std::get<GeneralCorrelation>(model_);
  double lo = 1.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < i; ++j) lo = std::min(lo, m(i, j));
  }
  return lo;
}

HypothesisConfig::HypothesisConfig(std::vector<double> mu, CorrelationModel model)
    : mu_(std::move(mu)), model_(std::move(model)) {
  if (mu_.empty()) throw UsageError("hypothesis configuration needs n >= 1");
  for (double m : mu_) {
    if (!std::isfinite(m) || m < 0.0) {
      throw DomainError("means must be finite and nonnegative, got " + std::to_string(m));
    }
    if (m == 0.0) ++null_count_;
  }
  if (!model_.is_equicorrelated() && model_.matrix().n != mu_.size()) {
    throw UsageError("correlation matrix is " + std::to_string(model_.matrix().n) +
                     "x" + std::to_string(model_.matrix().n) + " but n = " +
                     std::to_string(mu_.size()));
  }
}

HypothesisConfig HypothesisConfig::with_false_nulls(std::size_t n, std::size_t n_false,
                                                    double mu, CorrelationModel model) {
  if (n_false > n) {
    throw UsageError("number of false nulls exceeds n");
  }
  if (n_false > 0 && !(mu > 0.0)) {
    throw DomainError("false nulls need a positive mean");
  }
  std::vector<double> means(n, 0.0);
  std::fill_n(means.begin(), n_false, mu);
  return HypothesisConfig(std::move(means), std::move(model));
}

double HypothesisConfig::max_mean() const { return *std::max_element(mu_.begin(), mu_.end()); }

PValueVector pvalues(std::span<const double> x) {
  std::vector<double> p(x.size());
  std::transform(x.begin(), x.end(), p.begin(), [](double v) { return normal_sf(v); });
  return PValueVector(std::move(p));
}

std::vector<double> correlation_cholesky(const GeneralCorrelation& sigma) {
  std::vector<double> factor;
  if (try_cholesky(sigma, 0.0, factor) == 0) return factor;
  if (const std::size_t minor = try_cholesky(sigma, kJitter, factor); minor != 0) {
    throw ModelError("correlation matrix is not positive semidefinite: leading minor of order " +
                     std::to_string(minor) + " fails even after diagonal jitter 1e-10");
  }
  return factor;
}

GaussianSampler::GaussianSampler(HypothesisConfig config) : config_(std::move(config)) {
  if (!config_.model().is_equicorrelated()) {
    factor_ = correlation_cholesky(config_.model().matrix());
  }
}

void GaussianSampler::sample_statistics(Xoshiro256pp& rng, std::span<double> x) const {
  const std::size_t n = config_.n();
  if (x.size() != n) throw UsageError("sample buffer length differs from n");
  boost::random::normal_distribution<double> normal;
  const auto mu = config_.mu();

  if (factor_.empty()) {
    const double rho = config_.model().rho();
    const double theta = std::sqrt(rho) * normal(rng);
    const double scale = std::sqrt(1.0 - rho);
    for (std::size_t i = 0; i < n; ++i) x[i] = mu[i] + theta + scale * normal(rng);
    return;
  }

  thread_local std::vector<double> xi;
  xi.resize(n);
  for (auto& v : xi) v = normal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = factor_.data() + i * n;
    double acc = 0.0;
    for (std::size_t k = 0; k <= i; ++k) acc += row[k] * xi[k];
    x[i] = mu[i] + acc;
  }
}

Replicate GaussianSampler::sample(Xoshiro256pp& rng) const {
  std::vector<double> x(config_.n());
  sample_statistics(rng, x);
  auto p = pvalues(x);
  return Replicate{std::move(x), std::move(p)};
}

Replicate sample_equicorrelated(const HypothesisConfig& config, Xoshiro256pp& rng) {
  if (!config.model().is_equicorrelated()) {
    throw UsageError("sample_equicorrelated needs an equicorrelated model");
  }
  return GaussianSampler(config).sample(rng);
}

Replicate sample_general(const HypothesisConfig& config, Xoshiro256pp& rng) {
  if (config.model().is_equicorrelated()) {
    throw UsageError("sample_general needs an explicit correlation matrix");
  }
  return GaussianSampler(config).sample(rng);
}

}  // namespace fwerlim
