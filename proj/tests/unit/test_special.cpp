#include <doctest.h>

#include <cmath>

#include "depcen/special.hpp"
#include "oracles/bivariate_normal_mc.hpp"
#include "oracles/numeric.hpp"

using namespace depcen;

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(normal_cdf(-10.0) == doctest::Approx(7.619853024160527e-24).epsilon(1e-10));
  CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)));
  for (double p : {1e-300, 1e-20, 0.01, 0.3, 0.5, 0.77, 0.999999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));
}

TEST_CASE("bivariate normal cdf") {
  // Orthant at the origin has the arcsine closed form.
  for (double rho : {-0.9, -0.3, 0.0, 0.454, 0.7071, 0.951}) {
    CHECK(bivariate_normal_cdf(0.0, 0.0, rho) ==
          doctest::Approx(0.25 + std::asin(rho) / (2.0 * kPi)).epsilon(1e-13));
  }
  // Independence factorizes; perfect correlation gives the smaller margin.
  CHECK(bivariate_normal_cdf(0.3, -1.2, 0.0) ==
        doctest::Approx(normal_cdf(0.3) * normal_cdf(-1.2)).epsilon(1e-13));
  CHECK(bivariate_normal_cdf(0.3, -1.2, 1.0 - 1e-12) == doctest::Approx(normal_cdf(-1.2)).epsilon(1e-9));
  CHECK(bivariate_normal_cdf(0.3, -1.2, -1.0 + 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS(bivariate_normal_cdf(0.3, -1.2, 1.0));

  SUBCASE("agrees with a Monte-Carlo orthant oracle") {
    struct Case { double h, k, rho; };
    for (const auto& c : {Case{0.5, -0.4, 0.6}, Case{-1.0, 1.3, -0.5}, Case{1.5, 0.2, 0.9}}) {
      const auto [p, se] = oracle::orthant_probability(c.h, c.k, c.rho, 2'000'000, 99);
      CHECK(std::abs(bivariate_normal_cdf(c.h, c.k, c.rho) - p) < 4.0 * se);
    }
  }
}

TEST_CASE("debye1 against Simpson") {
  for (double x : {0.01, 0.5, 2.9174, 5.7363, 18.1915, 60.0}) {
    const double direct =
        oracle::simpson([](double t) { return t < 1e-12 ? 1.0 : t / std::expm1(t); }, 0.0, x, 20000) / x;
    CHECK(debye1(x) == doctest::Approx(direct).epsilon(1e-9));
  }
  // D1(x) = 1 - x/4 + x^2/36 near zero.
  CHECK(debye1(1e-3) == doctest::Approx(1.0 - 1e-3 / 4.0 + 1e-6 / 36.0).epsilon(1e-12));
}

TEST_CASE("tanh-sinh rule on the unit interval") {
  const auto rule = make_tanh_sinh_rule(0.05, 4.0);
  double i2 = 0.0, ilog = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    CHECK(rule.node[k] > 0.0);
    CHECK(rule.complement[k] > 0.0);
    CHECK(rule.node[k] + rule.complement[k] == doctest::Approx(1.0).epsilon(1e-15));
    i2 += rule.weight[k] * rule.node[k] * rule.node[k];
    ilog += rule.weight[k] * std::log(rule.node[k]);
  }
  CHECK(i2 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ilog == doctest::Approx(-1.0).epsilon(1e-10));
}
