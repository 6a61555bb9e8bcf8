#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "depcen/cg.hpp"
#include "depcen/datagen.hpp"
#include "depcen/error.hpp"
#include "oracles/kaplan_meier.hpp"

using namespace depcen;

namespace {

const std::vector<SurvivalRecord> kHand{{1, 1}, {2, 0}, {3, 1}, {4, 0}, {5, 1}};

std::vector<SurvivalRecord> generate(CopulaFamily family, double tau, const MarginalSpec& t,
                                     const MarginalSpec& c, std::size_t n, std::uint64_t seed) {
  GenConfig cfg;
  cfg.copula = param_from_tau(family, tau);
  cfg.marginal_t = t;
  cfg.marginal_c = c;
  cfg.n = n;
  cfg.seed = seed;
  return censor(sample_pairs(cfg));
}

}  // namespace

TEST_CASE("hand-evaluated Clayton curve") {
  // Values from a direct evaluation of the closed form with theta = 2.
  const auto clayton = param_from_tau(CopulaFamily::Clayton, 0.5);
  const auto t = cg_survival(kHand, clayton, Target::T);
  REQUIRE(t.steps.size() == 3);
  CHECK(t.steps[0].time == 1.0);
  CHECK(t.steps[0].survival == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(t.steps[1].time == 3.0);
  CHECK(t.steps[1].survival == doctest::Approx(0.44566881162492455).epsilon(1e-13));
  CHECK(t.steps[2].survival == 0.0);
  const auto c = cg_survival(kHand, clayton, Target::C);
  REQUIRE(c.steps.size() == 2);
  CHECK(c.steps[0].survival == doctest::Approx(0.671871013147025).epsilon(1e-13));
  CHECK(c.steps[1].survival == doctest::Approx(0.2183985192630591).epsilon(1e-13));
  CHECK(t.at(0.5) == 1.0);
  CHECK(t.at(1.0) == doctest::Approx(0.8));
  CHECK(t.at(2.9) == doctest::Approx(0.8));
}

TEST_CASE("independence copula reproduces Kaplan-Meier") {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> size(1, 30), tick(1, 12), coin(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<SurvivalRecord> data(static_cast<std::size_t>(size(gen)));
    std::vector<std::pair<double, int>> plain;
    for (auto& r : data) {
      // Coarse times so ties are common.
      r = {0.5 * tick(gen), coin(gen)};
      plain.emplace_back(r.x, r.delta);
    }
    for (auto target : {Target::T, Target::C}) {
      const int event = target == Target::T ? 1 : 0;
      const auto km = oracle::kaplan_meier(plain, event);
      if (km.empty()) {
        CHECK_THROWS_AS(cg_survival(data, CopulaSpec::independence(), target), DomainError);
        continue;
      }
      const auto cg = cg_survival(data, CopulaSpec::independence(), target);
      REQUIRE(cg.steps.size() == km.size());
      for (std::size_t k = 0; k < km.size(); ++k) {
        CHECK(cg.steps[k].time == km[k].time);
        CHECK(std::abs(cg.steps[k].survival - km[k].survival) <= 1e-12);
      }
    }
  }
}

TEST_CASE("complete data gives the empirical survival function") {
  std::vector<SurvivalRecord> data;
  for (int i = 1; i <= 8; ++i) data.push_back({1.5 * i, 1});
  for (auto family : {CopulaFamily::Clayton, CopulaFamily::Gumbel, CopulaFamily::Frank}) {
    const auto curve = cg_survival(data, param_from_tau(family, 0.6), Target::T);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(curve.steps[k].survival == doctest::Approx((7.0 - static_cast<double>(k)) / 8.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("curves are valid across the grid") {
  const auto data = generate(CopulaFamily::Clayton, 0.5, MarginalSpec::weibull(0.63, 0.06),
                             MarginalSpec::weibull(0.86, 0.04), 400, 2);
  for (auto family : {CopulaFamily::Clayton, CopulaFamily::Gumbel, CopulaFamily::Frank}) {
    for (double tau : {0.05, 0.3, 0.5, 0.8, 0.9}) {
      for (auto target : {Target::T, Target::C}) {
        CHECK_NOTHROW(cg_survival(data, param_from_tau(family, tau), target).validate());
      }
    }
  }
  // Stronger assumed dependence lowers the estimated survival of T.
  const auto indep = cg_survival(data, CopulaSpec::independence(), Target::T);
  const auto strong = cg_survival(data, param_from_tau(CopulaFamily::Clayton, 0.8), Target::T);
  for (std::size_t k = 0; k < indep.steps.size(); ++k) {
    CHECK(indep.steps[k].survival >= strong.steps[k].survival - 1e-12);
  }
}

TEST_CASE("curve errors") {
  CHECK_THROWS_AS(cg_survival({}, CopulaSpec::independence(), Target::T), DomainError);
  CHECK_THROWS_AS(cg_survival(kHand, CopulaSpec(CopulaFamily::Normal, 0.5), Target::T), DomainError);
  const std::vector<SurvivalRecord> censored{{1, 0}, {2, 0}};
  CHECK_THROWS_AS(cg_survival(censored, CopulaSpec::independence(), Target::T), DomainError);
  SurvivalCurve bad;
  bad.steps = {{1.0, 0.5}, {2.0, 0.6}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad.steps = {{2.0, 0.5}, {1.0, 0.4}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("fences from per-tau estimates") {
  const std::vector<std::vector<double>> same(4, std::vector<double>{-2.0, 0.5, 0.3});
  const auto r = region_from_estimates(same, MarginalFamily::LogNormal, MarginalFamily::Exponential);
  // mu may be negative; the widening uses |value|.
  CHECK(r.lower[0] == doctest::Approx(-2.2));
  CHECK(r.upper[0] == doctest::Approx(-1.8));
  CHECK(r.lower[1] == doctest::Approx(0.45));
  CHECK(r.upper[1] == doctest::Approx(0.55));
  CHECK(r.lower[2] == doctest::Approx(0.27));

  // Type-7 quartiles of {1, 2, 3, 10}: Q1 = 1.75, Q3 = 4.75, IQR = 3.
  const std::vector<std::vector<double>> spread{{1.0, 2.0, 0.1}, {2.0, 2.0, 0.2}, {3.0, 2.0, 0.3}, {10.0, 2.0, 0.4}};
  const auto s = region_from_estimates(spread, MarginalFamily::LogNormal, MarginalFamily::Exponential);
  CHECK(s.lower[0] == doctest::Approx(1.75 - 4.5));
  CHECK(s.upper[0] == doctest::Approx(4.75 + 4.5));
  CHECK(s.lower[1] == doctest::Approx(1.8));
  CHECK(s.upper[1] == doctest::Approx(2.2));
  CHECK(s.lower[2] == doctest::Approx(1e-6));
  CHECK(s.upper[2] == doctest::Approx(0.325 + 1.5 * 0.15));
}

TEST_CASE("feasible region") {
  RegionOptions opts;
  opts.fits_per_tau = 20;
  opts.seed = 5;

  SUBCASE("contains the truth under independence") {
    const auto data = generate(CopulaFamily::Normal, 0.0, MarginalSpec::lognormal(2.2, 1.0),
                               MarginalSpec::lognormal(2.0, 0.25), 2000, 4);
    const auto region = feasible_region(data, CopulaFamily::Normal, MarginalFamily::LogNormal,
                                        MarginalFamily::LogNormal, opts);
    CHECK(region.contains(std::vector<double>{2.2, 1.0, 2.0, 0.0625}));
  }

  SUBCASE("invariant to row order") {
    auto data = generate(CopulaFamily::Gumbel, 0.3, MarginalSpec::weibull(0.63, 0.06),
                         MarginalSpec::weibull(0.86, 0.04), 300, 6);
    const auto a = feasible_region(data, CopulaFamily::Gumbel, MarginalFamily::Weibull, MarginalFamily::Weibull, opts);
    std::reverse(data.begin(), data.end());
    std::shuffle(data.begin(), data.end(), std::mt19937_64(1));
    const auto b = feasible_region(data, CopulaFamily::Gumbel, MarginalFamily::Weibull, MarginalFamily::Weibull, opts);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
  }

  SUBCASE("mixed marginals contain the truth in most replicates") {
    RegionOptions quick = opts;
    int hits = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      const auto data = generate(CopulaFamily::Normal, 0.3, MarginalSpec::weibull(0.63, 0.06),
                                 MarginalSpec::lognormal(2.0, 0.25), 1000, 100 + rep);
      quick.seed = rep;
      const auto region = feasible_region(data, CopulaFamily::Normal, MarginalFamily::Weibull,
                                          MarginalFamily::LogNormal, quick);
      hits += region.contains(std::vector<double>{0.63, 0.06, 2.0, 0.0625});
    }
    CHECK(hits >= 95);
  }
}
