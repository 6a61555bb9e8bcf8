#include <doctest.h>

#include <cmath>
#include <vector>

#include "depcen/error.hpp"
#include "depcen/marginal.hpp"
#include "oracles/numeric.hpp"

using namespace depcen;

TEST_CASE("survival examples") {
  CHECK(survival(MarginalSpec::weibull(2.0, 0.25), 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(inverse_survival(MarginalSpec::exponential(0.025), std::exp(-1.0)) == doctest::Approx(40.0));
  CHECK(survival(MarginalSpec::lognormal(2.2, 1.0), std::exp(2.2)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(inverse_survival(MarginalSpec::weibull(0.63, 0.06), std::exp(-0.06)) == doctest::Approx(1.0));
  CHECK(inverse_survival(MarginalSpec::exponential(0.2), 0.5) ==
        doctest::Approx(std::log(2.0) / 0.2).epsilon(1e-14));
  const auto ln = MarginalSpec::lognormal(2.0, 0.25);
  CHECK(std::abs(survival(ln, inverse_survival(ln, 0.37)) - 0.37) <= 1e-10);
  CHECK(survival(ln, 0.0) == 1.0);
  CHECK(inverse_survival(ln, 1.0) == 0.0);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(MarginalSpec::exponential(0.0), DomainError);
  CHECK_THROWS_AS(MarginalSpec::weibull(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(MarginalSpec::lognormal(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(survival(MarginalSpec::exponential(1.0), -1.0), DomainError);
  CHECK_THROWS_AS(inverse_survival(MarginalSpec::exponential(1.0), 0.0), DomainError);
  CHECK_THROWS_AS(inverse_survival(MarginalSpec::exponential(1.0), 1.5), DomainError);
}

TEST_CASE("exponential is weibull with shape one") {
  const auto e = MarginalSpec::exponential(0.7);
  const auto w = MarginalSpec::weibull(1.0, 0.7);
  for (double t : {0.01, 0.5, 1.0, 3.0, 20.0}) {
    CHECK(survival(e, t) == doctest::Approx(survival(w, t)).epsilon(1e-12));
    CHECK(cdf(e, t) == doctest::Approx(cdf(w, t)).epsilon(1e-12));
    CHECK(pdf(e, t) == doctest::Approx(pdf(w, t)).epsilon(1e-12));
    CHECK(hazard(e, t) == doctest::Approx(hazard(w, t)).epsilon(1e-12));
  }
  for (double u : {0.01, 0.4, 0.99}) {
    CHECK(inverse_survival(e, u) == doctest::Approx(inverse_survival(w, u)).epsilon(1e-12));
  }
}

TEST_CASE("densities") {
  const std::vector<MarginalSpec> specs{MarginalSpec::exponential(0.025), MarginalSpec::weibull(0.63, 0.06),
                                        MarginalSpec::weibull(2.0, 0.25), MarginalSpec::lognormal(2.2, 1.0),
                                        MarginalSpec::lognormal(-1.0, 0.25)};
  for (const auto& m : specs) {
    CAPTURE(m.describe());
    // pdf = -dS/dt.
    for (double q : {0.1, 0.5, 0.9}) {
      const double t = inverse_survival(m, q);
      const double h = 1e-6 * t;
      CHECK(pdf(m, t) ==
            doctest::Approx(-oracle::central_difference([&](double x) { return survival(m, x); }, t, h))
                .epsilon(1e-6));
      CHECK(hazard(m, t) == doctest::Approx(pdf(m, t) / survival(m, t)).epsilon(1e-12));
      CHECK(log_pdf(m, t) == doctest::Approx(std::log(pdf(m, t))).epsilon(1e-12));
      CHECK(log_survival(m, t) == doctest::Approx(std::log(survival(m, t))).epsilon(1e-12));
      CHECK(survival(m, t) + cdf(m, t) == doctest::Approx(1.0).epsilon(1e-15));
    }
    // Integral of the density up to the 1 - 1e-6 quantile plus the tail mass.
    const double t_max = inverse_survival(m, 1e-6);
    const double lo = inverse_survival(m, 1.0 - 1e-12);
    // Integrate on the log-time scale, where all three families are smooth.
    const double mass = oracle::simpson(
        [&](double y) { return pdf(m, std::exp(y)) * std::exp(y); }, std::log(lo), std::log(t_max), 20000);
    CHECK(std::abs(mass + survival(m, t_max) + cdf(m, lo) - 1.0) < 1e-4);
  }
  const double a = 0.63, l = 0.06;
  const auto w = MarginalSpec::weibull(a, l);
  for (double t : {0.5, 2.0, 30.0}) {
    CHECK(hazard(w, t) == doctest::Approx(a * l * std::pow(t, a - 1.0)).epsilon(1e-10));
  }
}

namespace {

// Phi^{-1} by bisection on erfc, independent of the library's quantile.
double probit(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("log-time helpers") {
  const std::vector<MarginalSpec> specs{MarginalSpec::exponential(0.2), MarginalSpec::weibull(0.86, 0.04),
                                        MarginalSpec::lognormal(2.0, 0.25)};
  for (const auto& m : specs) {
    CAPTURE(m.describe());
    for (double y : {-3.0, 0.0, 1.7, 2.5}) {
      const double s = survival(m, std::exp(y));
      CHECK(survival_at_log_time(m, y) == doctest::Approx(s).epsilon(1e-13));
      if (s < 0.999) CHECK(survival_normal_score(m, y) == doctest::Approx(probit(s)).epsilon(1e-9));
      if (m.family() == MarginalFamily::LogNormal) {
        CHECK(survival_normal_score(m, y) == doctest::Approx((m.mu() - y) / m.sigma()).epsilon(1e-12));
      }
    }
    for (double s : {1e-6, 0.2, 0.5, 0.9}) {
      const double y = std::log(inverse_survival(m, s));
      CHECK(log_time_from_node(m, std::log(-std::log(s)), probit(1.0 - s)) == doctest::Approx(y).epsilon(1e-9));
    }
  }
}

TEST_CASE("coordinates and parsing") {
  const auto w = MarginalSpec::weibull(0.63, 0.06);
  std::vector<double> c(2);
  w.write_coords(c);
  CHECK(c == std::vector<double>{0.63, 0.06});
  CHECK(MarginalSpec::from_coords(MarginalFamily::Weibull, c) == w);
  const auto ln = MarginalSpec::lognormal(2.0, 0.25);
  ln.write_coords(c);
  CHECK(c[1] == doctest::Approx(0.0625));
  CHECK(MarginalSpec::from_coords(MarginalFamily::LogNormal, c).sigma() == doctest::Approx(0.25));

  CHECK(parse_marginal_spec("weibull:0.63,0.06") == w);
  CHECK(parse_marginal_spec("exp:0.025") == MarginalSpec::exponential(0.025));
  CHECK(parse_marginal_spec("lognormal:2.2,1") == MarginalSpec::lognormal(2.2, 1.0));
  CHECK(parse_marginal_spec(w.describe()) == w);
  CHECK_THROWS_AS(parse_marginal_spec("weibull:0.63"), ConfigError);
  CHECK_THROWS_AS(parse_marginal_spec("exp:abc"), ConfigError);
  CHECK_THROWS_AS(parse_marginal_spec("gamma:1,2"), ConfigError);
  CHECK_THROWS_AS(parse_marginal_spec("exp:-1"), ConfigError);
  CHECK_THROWS_AS(parse_marginal_spec("weibull"), ConfigError);
}

TEST_CASE("curve fitting") {
  auto exact_points = [](const MarginalSpec& m) {
    std::vector<CurvePoint> pts;
    for (int k = 1; k <= 20; ++k) {
      const double s = k / 21.0;
      pts.push_back({inverse_survival(m, s), s});
    }
    return pts;
  };
  const auto w = MarginalSpec::weibull(0.63, 0.06);
  const auto fw = fit_to_curve(exact_points(w), MarginalFamily::Weibull);
  CHECK(std::abs(fw.shape() - 0.63) < 1e-4);
  CHECK(std::abs(fw.scale() - 0.06) < 1e-4);
  const auto fe = fit_to_curve(exact_points(MarginalSpec::exponential(0.025)), MarginalFamily::Exponential);
  CHECK(std::abs(fe.scale() - 0.025) < 1e-4);
  const auto fl = fit_to_curve(exact_points(MarginalSpec::lognormal(2.2, 1.0)), MarginalFamily::LogNormal);
  CHECK(std::abs(fl.mu() - 2.2) < 1e-4);
  CHECK(std::abs(fl.sigma() - 1.0) < 1e-4);

  const std::vector<CurvePoint> flat{{1.0, 0.5}, {2.0, 0.5}, {3.0, 0.4}};
  CHECK_THROWS_AS(fit_to_curve(flat, MarginalFamily::Weibull), FitError);
  const std::vector<CurvePoint> two{{1.0, 0.5}, {2.0, 0.4}};
  CHECK_THROWS_AS(fit_to_curve(two, MarginalFamily::Exponential), FitError);
  const std::vector<CurvePoint> bad{{1.0, 0.5}, {2.0, 0.4}, {3.0, 1.0}};
  CHECK_THROWS_AS(fit_to_curve(bad, MarginalFamily::Exponential), FitError);
}
