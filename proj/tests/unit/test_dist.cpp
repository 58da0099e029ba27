#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "checks.hpp"
#include "doctest.h"
#include "flower/dist.hpp"
#include "flower/error.hpp"
#include "flower/rng.hpp"

using namespace flower;

TEST_SUITE("dist") {
  TEST_CASE("wide truncation reproduces the standard normal peak") {
    CHECK(tn_pdf(5.0, {5.0, 1.0, -100.0, 100.0}) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  }

  TEST_CASE("density vanishes outside the support") {
    CHECK(tn_pdf(-1.0, {0.0, 1.0, 0.0, 10.0}) == 0.0);
    CHECK(tn_pdf(10.5, {0.0, 1.0, 0.0, 10.0}) == 0.0);
    CHECK(tn_log_pdf(-1.0, {0.0, 1.0, 0.0, 10.0}) == -std::numeric_limits<double>::infinity());
  }

  TEST_CASE("unit-interval truncation matches the closed form and integrates to one") {
    const TruncNormalParams p{0.0, 1.0, 0.0, 1.0};
    const boost::math::normal n01;
    const double expected = boost::math::pdf(n01, 0.5) / (boost::math::cdf(n01, 1.0) - 0.5);
    CHECK(tn_pdf(0.5, p) == doctest::Approx(expected).epsilon(1e-13));
    const double mass = checks::integrate([&](double x) { return tn_pdf(x, p); }, 0.0, 1.0);
    CHECK(std::fabs(mass - 1.0) < 1e-10);
  }

  TEST_CASE("cdf boundaries and symmetry") {
    const TruncNormalParams p{3.0, 2.0, 1.0, 5.0};
    CHECK(tn_cdf(1.0, p) == 0.0);
    CHECK(tn_cdf(5.0, p) == 1.0);
    CHECK(tn_cdf(0.0, p) == 0.0);
    CHECK(tn_cdf(7.0, p) == 1.0);
    CHECK(tn_cdf(3.0, p) == doctest::Approx(0.5).epsilon(1e-14));
  }

  TEST_CASE("quantile boundaries and symmetry") {
    const TruncNormalParams p{3.0, 2.0, 1.0, 5.0};
    CHECK(tn_quantile(0.0, p) == 1.0);
    CHECK(tn_quantile(1.0, p) == 5.0);
    CHECK(tn_quantile(0.5, p) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(tn_quantile(-0.1, p), DomainError);
    CHECK_THROWS_AS(tn_quantile(1.1, p), DomainError);
  }

  TEST_CASE("quantile inverts the cdf at 1000 random points") {
    Rng rng(11);
    const TruncNormalParams p{4.0, 1.5, 0.0, 10.0};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = 10.0 * rng.uniform();
      if (tn_pdf(x, p) < 1e-6) continue;
      worst = std::max(worst, std::fabs(tn_quantile(tn_cdf(x, p), p) - x));
    }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(tn_pdf(0.0, {0.0, 0.0, 0.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(tn_pdf(0.0, {0.0, -1.0, 0.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(tn_cdf(0.0, {0.0, 1.0, 1.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(tn_cdf(0.0, {0.0, 1.0, 2.0, 1.0}), ParameterError);
  }

  TEST_CASE("standard normal quantile") {
    CHECK(std_normal_quantile(0.5) == 0.0);
    CHECK(std_normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    const double u = std_normal_cdf(1.96);
    CHECK(std_normal_quantile(u) == doctest::Approx(1.96).epsilon(1e-12));
    CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
    CHECK(std::isfinite(clamped_normal_score(0.0)));
    CHECK(clamped_normal_score(0.0) == doctest::Approx(std_normal_quantile(1e-12)));
  }

  TEST_CASE("tiny kernels far from the support keep a finite normalizer") {
    const TruncNormalParams p{-40.0, 0.25, 0.0, 10.0};
    const double mass = checks::integrate([&](double x) { return tn_pdf(x, p); }, 0.0, 10.0);
    CHECK(std::isfinite(tn_log_pdf(0.1, p)));
    CHECK(std::fabs(mass - 1.0) < 1e-8);
  }

  TEST_CASE("oracle suite over a random parameter lattice") {
    for (const auto& r : checks::dist_suite(20240101)) {
      INFO(r.name << ": worst " << r.value << " vs " << r.tolerance << " " << r.detail);
      CHECK(r.pass);
    }
  }
}
