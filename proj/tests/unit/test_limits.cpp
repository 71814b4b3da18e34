#include <doctest.h>

#include <cmath>
#include <limits>

#include "fwerlim/distributions.hpp"
#include "fwerlim/errors.hpp"
#include "fwerlim/limits.hpp"

using namespace fwerlim;

namespace {

// Independent brute-force scan of s on a uniform grid in t.
double scan_limit(double alpha, double rho, int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k < points; ++k) {
    const double t = static_cast<double>(k) / points;
    best = std::min(best, s_objective(t, alpha, rho));
  }
  return normal_sf(best);
}

}  // namespace

TEST_CASE("s objective") {
  // [Phi^{-1}(0.975) - sqrt(0.5) * 0] / sqrt(0.5), value from mpmath.
  CHECK(s_objective(0.5, 0.05, 0.5) == doctest::Approx(2.7718076486993558906).epsilon(1e-13));
  CHECK_THROWS_AS(s_objective(0.0, 0.05, 0.5), DomainError);
  CHECK_THROWS_AS(s_objective(1.0, 0.05, 0.5), DomainError);
  CHECK_THROWS_AS(s_objective(0.5, 0.05, 0.0), DomainError);
  CHECK_THROWS_AS(s_objective(0.5, 1.0, 0.5), DomainError);
  for (double t : {1e-300, 1e-12, 0.3, 0.999999}) {
    for (double a : {1e-6, 0.05, 0.999}) CHECK(std::isfinite(s_objective(t, a, 0.3)));
  }
  // The Z coefficient sqrt(1 - rho) shrinks as rho grows.
  double prev = std::numeric_limits<double>::infinity();
  for (double rho = 0.05; rho < 1.0; rho += 0.05) {
    const double coeff = (s_objective(0.3, 0.05, rho) * std::sqrt(rho) -
                          normal_upper_quantile(0.3 * 0.05)) /
                         -normal_upper_quantile(0.3);
    CHECK(coeff == doctest::Approx(std::sqrt(1.0 - rho)).epsilon(1e-12));
    CHECK(coeff < prev);
    prev = coeff;
  }
}

TEST_CASE("boundary values are alpha exactly") {
  for (double a : {0.01, 0.05, 0.3}) {
    for (double rho : {0.0, 1.0, 1e-13, 1.0 - 1e-13}) {
      const auto r = limiting_bh_fdr(a, rho);
      CHECK(r.value == a);
      CHECK_FALSE(r.minimizer_t.has_value());
    }
  }
  CHECK_THROWS_AS(limiting_bh_fdr(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(limiting_bh_fdr(0.05, 1.5), DomainError);
  CHECK_THROWS_AS(limiting_bh_fdr(0.05, 0.5, LimitOptions{2, 1e-10}), UsageError);
}

TEST_CASE("high-precision reference values") {
  // mpmath, 50 digits: minimum of s over t, then 1 - Phi.
  struct Case {
    double rho, value, t, s;
  };
  const Case cases[] = {
      {0.25, 0.0084050969361345154, 4.4415996e-5, 2.3908330723753947},
      {0.5, 0.010287709236323961, 0.025133820451401372, 2.3156860162657551},
      {0.75, 0.013956424573478919, 0.23649607, 2.1985090669386285},
  };
  for (const auto& c : cases) {
    const auto r = limiting_bh_fdr(0.05, c.rho);
    CAPTURE(c.rho);
    CHECK(r.value == doctest::Approx(c.value).epsilon(1e-9));
    CHECK(r.objective_at_minimizer == doctest::Approx(c.s).epsilon(1e-12));
    REQUIRE(r.minimizer_t.has_value());
    CHECK(*r.minimizer_t == doctest::Approx(c.t).epsilon(1e-4));
    CHECK(r.grid_points == 10000);
    CHECK(r.refinement_tolerance == 1e-10);
    // The reported objective is s at the reported minimizer.
    CHECK(std::abs(s_objective(*r.minimizer_t, 0.05, c.rho) - r.objective_at_minimizer) <= 1e-10);
  }
}

TEST_CASE("two-resolution agreement with a uniform brute-force scan") {
  const double grid = limiting_bh_fdr(0.05, 0.5).value;
  CHECK(std::abs(grid - scan_limit(0.05, 0.5, 1000000)) <= 1e-6);
  const double coarse = limiting_bh_fdr(0.05, 0.5, LimitOptions{1000, 1e-10}).value;
  CHECK(std::abs(grid - coarse) <= 1e-9);
  // Where the infimum sits at moderate t a uniform scan finds it too.
  CHECK(std::abs(limiting_bh_fdr(0.1, 0.8).value - scan_limit(0.1, 0.8, 1000000)) <= 1e-6);
}

TEST_CASE("halving the refinement tolerance is stable") {
  double worst = 0.0;
  for (double a = 0.01; a <= 0.2 + 1e-12; a += 0.01) {
    for (double rho = 0.05; rho <= 0.95 + 1e-12; rho += 0.05) {
      const double v1 = limiting_bh_fdr(a, rho, LimitOptions{10000, 1e-10}).value;
      const double v2 = limiting_bh_fdr(a, rho, LimitOptions{10000, 5e-11}).value;
      worst = std::max(worst, std::abs(v1 - v2));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("positivity and the s(1/2) floor") {
  for (double a : {0.01, 0.05, 0.1, 0.2}) {
    for (double rho = 0.05; rho < 0.96; rho += 0.05) {
      const auto r = limiting_bh_fdr(a, rho);
      CAPTURE(a);
      CAPTURE(rho);
      CHECK(r.value > 0.0);
      CHECK(r.value <= 1.0);
      // inf s <= s(1/2), so the limit is at least 1 - Phi(s(1/2)).
      CHECK(r.value >= normal_sf(s_objective(0.5, a, rho)));
    }
  }
  CHECK(limiting_bh_fdr(0.05, 0.01).value > 0.0);
}

TEST_CASE("class bound equals the BH limit") {
  for (double a : {0.01, 0.05, 0.2}) {
    for (double rho : {0.1, 0.5, 0.9}) CHECK(stepup_class_bound(a, rho) == limiting_bh_fdr(a, rho).value);
  }
}

TEST_CASE("reference limits") {
  const double poisson = 1.0 - std::exp(-0.05);
  CHECK(poisson == doctest::Approx(0.048770575499285991).epsilon(1e-15));

  auto ref = reference_limit(Procedure::hommel(0.05), 0.0);
  CHECK(ref.is_point());
  CHECK(ref.low == doctest::Approx(poisson).epsilon(1e-15));
  CHECK(reference_limit(Procedure::hommel(0.05), 0.5).high == 0.0);

  ref = reference_limit(Procedure::stepwise(Family::Hochberg, 0.05), 0.0);
  CHECK_FALSE(ref.is_point());
  CHECK(ref.low == doctest::Approx(poisson).epsilon(1e-15));
  CHECK(ref.high == 0.05);
  CHECK(reference_limit(Procedure::stepwise(Family::Hochberg, 0.05), 0.5).high == 0.0);
  CHECK_THROWS_AS(reference_limit(Procedure::stepwise(Family::Hochberg, 0.6), 0.5), DomainError);

  for (Family f : {Family::Bonferroni, Family::Holm, Family::Sidak, Family::BenjaminiLiu1,
                   Family::BenjaminiLiu2, Family::BenjaminiLiu3}) {
    CHECK(reference_limit(Procedure::stepwise(f, 0.05), 0.5).high == 0.0);
  }
  CHECK(reference_limit(Procedure::stepwise(Family::Bonferroni, 0.05), 0.0).low ==
        doctest::Approx(poisson).epsilon(1e-15));
  CHECK(reference_limit(Procedure::stepwise(Family::Sidak, 0.05), 0.0).low == 0.05);

  const double bh = limiting_bh_fdr(0.05, 0.3).value;
  CHECK(reference_limit(Procedure::stepwise(Family::BenjaminiHochberg, 0.05), 0.3).low == bh);
  CHECK(reference_limit(Procedure::stepwise(Family::BenjaminiHochberg, 0.05), 0.0).low == 0.05);

  CHECK_THROWS_AS(reference_limit(Procedure::custom(CriticalValues({0.01}), Direction::StepDown), 0.0),
                  UsageError);
  CHECK_THROWS_AS(reference_limit(Procedure::hommel(0.05), 1.0), DomainError);
}
