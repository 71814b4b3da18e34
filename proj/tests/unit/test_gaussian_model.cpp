#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fwerlim/distributions.hpp"
#include "fwerlim/errors.hpp"
#include "fwerlim/gaussian_model.hpp"
#include "fwerlim/rng.hpp"

using namespace fwerlim;

namespace {

struct Moments {
  std::size_t count = 0;
  double mean_a = 0.0, mean_b = 0.0, m2_a = 0.0, m2_b = 0.0, co = 0.0;

  // Welford update for a pair.
  void add(double a, double b) {
    ++count;
    const double da = a - mean_a;
    const double db = b - mean_b;
    mean_a += da / count;
    mean_b += db / count;
    m2_a += da * (a - mean_a);
    m2_b += db * (b - mean_b);
    co += da * (b - mean_b);
  }
  double var_a() const { return m2_a / (count - 1); }
  double var_b() const { return m2_b / (count - 1); }
  double corr() const { return co / std::sqrt(m2_a * m2_b); }
};

GeneralCorrelation equicorrelation_matrix(std::size_t n, double rho) {
  GeneralCorrelation m{n, std::vector<double>(n * n, rho)};
  for (std::size_t i = 0; i < n; ++i) m.entries[i * n + i] = 1.0;
  return m;
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  auto a = Xoshiro256pp::for_stream(42, 7);
  auto b = Xoshiro256pp::for_stream(42, 7);
  auto c = Xoshiro256pp::for_stream(42, 8);
  auto d = Xoshiro256pp::for_stream(43, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    REQUIRE(va == b());
    differs_c = differs_c || va != c();
    differs_d = differs_d || va != d();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  // splitmix64 reference output for seed 0 (first value of the published generator).
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("model validation") {
  CHECK_NOTHROW(CorrelationModel::equicorrelated(0.0));
  CHECK_THROWS_AS(CorrelationModel::equicorrelated(1.0), DomainError);
  CHECK_THROWS_AS(CorrelationModel::equicorrelated(-0.1), DomainError);
  CHECK_THROWS_AS(CorrelationModel::general(2, {1, 0.5, 0.5}), UsageError);
  CHECK_THROWS_AS(CorrelationModel::general(2, {1, 0.5, 0.4, 1}), ModelError);
  CHECK_THROWS_AS(CorrelationModel::general(2, {1, -0.5, -0.5, 1}), ModelError);
  CHECK_THROWS_AS(CorrelationModel::general(2, {0.9, 0.5, 0.5, 1}), ModelError);
  CHECK_THROWS_AS(HypothesisConfig({0.0, -1.0}, CorrelationModel::equicorrelated(0.0)),
                  DomainError);
  CHECK_THROWS_AS(HypothesisConfig({0.0, 1.0, 0.0},
                                   CorrelationModel::general(2, {1, 0.5, 0.5, 1})),
                  UsageError);
  CHECK_THROWS_AS(HypothesisConfig::with_false_nulls(3, 4, 1.0, CorrelationModel::equicorrelated(0)),
                  UsageError);

  const auto g = CorrelationModel::general(3, {1, 0.3, 0.5, 0.3, 1, 0.4, 0.5, 0.4, 1});
  CHECK(g.min_off_diagonal() == 0.3);
  CHECK_THROWS_AS(g.rho(), UsageError);
  CHECK(CorrelationModel::equicorrelated(0.25).min_off_diagonal() == 0.25);
}

TEST_CASE("hypothesis configuration") {
  const auto c = HypothesisConfig::with_false_nulls(10, 3, 2.5, CorrelationModel::equicorrelated(0.5));
  CHECK(c.n() == 10);
  CHECK(c.null_count() == 7);
  CHECK(c.false_count() == 3);
  CHECK_FALSE(c.is_null(0));
  CHECK(c.is_null(3));
  CHECK(c.max_mean() == 2.5);
  CHECK_FALSE(c.is_global_null());
  CHECK(HypothesisConfig::global_null(4, CorrelationModel::equicorrelated(0)).is_global_null());
}

TEST_CASE("pvalues") {
  CHECK(pvalues(std::vector<double>{0.0})[0] == 0.5);
  CHECK(std::abs(pvalues(std::vector<double>{1.959964})[0] - 0.025) <= 1e-6);
  for (std::size_t n : {10u, 1000u, 100000u}) {
    const double cut = normal_upper_quantile(0.05 / n);
    CHECK(std::abs(pvalues(std::vector<double>{cut})[0] - 0.05 / n) <= 1e-12);
  }
  const auto p = pvalues(std::vector<double>{-1.0, 0.0, 1.0, 5.0});
  CHECK(std::is_sorted(p.values().rbegin(), p.values().rend()));
}

TEST_CASE("equicorrelated moments") {
  for (double rho : {0.0, 0.5, 0.9}) {
    const GaussianSampler sampler(
        HypothesisConfig::global_null(3, CorrelationModel::equicorrelated(rho)));
    Moments m;
    std::vector<double> x(3);
    for (std::size_t r = 0; r < 100000; ++r) {
      auto rng = Xoshiro256pp::for_stream(1, r);
      sampler.sample_statistics(rng, x);
      m.add(x[0], x[1]);
    }
    CAPTURE(rho);
    CHECK(std::abs(m.var_a() - 1.0) <= 0.02);
    CHECK(std::abs(m.var_b() - 1.0) <= 0.02);
    CHECK(std::abs(m.corr() - rho) <= 0.01);
    CHECK(std::abs(m.mean_a) <= 0.02);
  }
}

TEST_CASE("rho = 0 draws independent standard normals with the given means") {
  const auto cfg = HypothesisConfig({3.0, 0.0}, CorrelationModel::equicorrelated(0.0));
  Moments m;
  for (std::size_t r = 0; r < 50000; ++r) {
    auto rng = Xoshiro256pp::for_stream(2, r);
    const auto rep = sample_equicorrelated(cfg, rng);
    m.add(rep.x[0], rep.x[1]);
    REQUIRE(rep.p[0] == normal_sf(rep.x[0]));
  }
  CHECK(std::abs(m.mean_a - 3.0) <= 0.03);
  CHECK(std::abs(m.corr()) <= 0.02);
}

TEST_CASE("general sampler reproduces a 3x3 correlation matrix") {
  const double r12 = 0.3, r13 = 0.5, r23 = 0.4;
  const auto cfg = HypothesisConfig::global_null(
      3, CorrelationModel::general(3, {1, r12, r13, r12, 1, r23, r13, r23, 1}));
  const GaussianSampler sampler(cfg);
  Moments m12, m13, m23;
  std::vector<double> x(3);
  for (std::size_t r = 0; r < 1000000; ++r) {
    auto rng = Xoshiro256pp::for_stream(3, r);
    sampler.sample_statistics(rng, x);
    m12.add(x[0], x[1]);
    m13.add(x[0], x[2]);
    m23.add(x[1], x[2]);
  }
  CHECK(std::abs(m12.corr() - r12) <= 0.01);
  CHECK(std::abs(m13.corr() - r13) <= 0.01);
  CHECK(std::abs(m23.corr() - r23) <= 0.01);
  CHECK(std::abs(m12.var_a() - 1.0) <= 0.01);
}

TEST_CASE("general sampler agrees with the equicorrelated fast path") {
  const std::size_t n = 50;
  const double rho = 0.4;
  const auto m = equicorrelation_matrix(n, rho);
  const GaussianSampler fast(HypothesisConfig::global_null(n, CorrelationModel::equicorrelated(rho)));
  const GaussianSampler slow(
      HypothesisConfig::global_null(n, CorrelationModel::general(n, m.entries)));
  const std::size_t reps = 100000;
  // Compare E[X_1], E[X_1^2] and E[X_1 X_50]; the streams differ, so the
  // difference of means has standard error sqrt(2 var / reps).
  double s_fast[3] = {}, s_slow[3] = {}, q_fast[3] = {}, q_slow[3] = {};
  std::vector<double> x(n);
  for (std::size_t r = 0; r < reps; ++r) {
    auto rng1 = Xoshiro256pp::for_stream(4, r);
    fast.sample_statistics(rng1, x);
    const double f[3] = {x[0], x[0] * x[0], x[0] * x[n - 1]};
    auto rng2 = Xoshiro256pp::for_stream(5, r);
    slow.sample_statistics(rng2, x);
    const double s[3] = {x[0], x[0] * x[0], x[0] * x[n - 1]};
    for (int k = 0; k < 3; ++k) {
      s_fast[k] += f[k];
      q_fast[k] += f[k] * f[k];
      s_slow[k] += s[k];
      q_slow[k] += s[k] * s[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double mf = s_fast[k] / reps, ms = s_slow[k] / reps;
    const double vf = q_fast[k] / reps - mf * mf, vs = q_slow[k] / reps - ms * ms;
    const double se = std::sqrt((vf + vs) / reps);
    CAPTURE(k);
    CHECK(std::abs(mf - ms) <= 3.0 * se);
  }
}

TEST_CASE("identity matrix behaves like rho = 0") {
  const std::size_t n = 4;
  const auto id = equicorrelation_matrix(n, 0.0);
  const auto factor = correlation_cholesky(id);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) CHECK(factor[i * n + j] == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("cholesky jitter and failure") {
  // Rank-one all-ones matrix is PSD but singular; the jitter lets it through.
  const auto ones = equicorrelation_matrix(5, 1.0);
  const auto f = correlation_cholesky(ones);
  CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f[1 * 5 + 0] == doctest::Approx(1.0).epsilon(1e-9));
  // Not PSD: rho12 = rho23 = 0.9, rho13 = 0.
  const GeneralCorrelation bad{3, {1, 0.9, 0, 0.9, 1, 0.9, 0, 0.9, 1}};
  try {
    correlation_cholesky(bad);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("order 3") != std::string::npos);
  }
  CHECK_THROWS_AS(GaussianSampler(HypothesisConfig::global_null(
                      3, CorrelationModel::general(3, bad.entries))),
                  ModelError);
}

TEST_CASE("null p-values are uniform (Kolmogorov-Smirnov)") {
  for (double rho : {0.0, 0.5}) {
    const GaussianSampler sampler(
        HypothesisConfig::global_null(2, CorrelationModel::equicorrelated(rho)));
    const std::size_t reps = 100000;
    std::vector<double> p1(reps);
    std::vector<double> x(2);
    for (std::size_t r = 0; r < reps; ++r) {
      auto rng = Xoshiro256pp::for_stream(6, r);
      sampler.sample_statistics(rng, x);
      p1[r] = normal_sf(x[0]);
    }
    std::sort(p1.begin(), p1.end());
    double d = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
      d = std::max(d, std::max((i + 1.0) / reps - p1[i], p1[i] - static_cast<double>(i) / reps));
    }
    CAPTURE(rho);
    CHECK(d < 1.6276 / std::sqrt(static_cast<double>(reps)));  // 1% asymptotic critical value
  }
}

TEST_CASE("exchangeability across coordinates") {
  const std::size_t n = 6;
  const GaussianSampler sampler(
      HypothesisConfig::global_null(n, CorrelationModel::equicorrelated(0.3)));
  std::vector<double> sum(n, 0.0), sq(n, 0.0), x(n);
  const std::size_t reps = 100000;
  for (std::size_t r = 0; r < reps; ++r) {
    auto rng = Xoshiro256pp::for_stream(8, r);
    sampler.sample_statistics(rng, x);
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += x[i];
      sq[i] += x[i] * x[i];
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    // Coordinates share theta, so compare against a generous 5 SE of the
    // independent-part difference (variance 2 (1 - rho) / reps).
    const double se = std::sqrt(2.0 * 0.7 / reps);
    CHECK(std::abs(sum[i] - sum[0]) / reps <= 5.0 * se);
    CHECK(std::abs(sq[i] - sq[0]) / reps <= 0.03);
  }
}

TEST_CASE("same seed gives bit-identical replicates") {
  const auto cfg =
      HypothesisConfig::with_false_nulls(20, 5, 1.5, CorrelationModel::equicorrelated(0.2));
  for (std::size_t r = 0; r < 50; ++r) {
    auto a = Xoshiro256pp::for_stream(99, r);
    auto b = Xoshiro256pp::for_stream(99, r);
    const auto ra = sample_equicorrelated(cfg, a);
    const auto rb = sample_equicorrelated(cfg, b);
    REQUIRE(ra.x == rb.x);
  }
  CHECK_THROWS_AS([&] {
    auto rng = Xoshiro256pp::for_stream(1, 1);
    sample_general(cfg, rng);
  }(), UsageError);
}
