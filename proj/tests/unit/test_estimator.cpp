#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "depcen/datagen.hpp"
#include "depcen/error.hpp"
#include "depcen/estimator.hpp"

using namespace depcen;

namespace {

std::vector<SurvivalRecord> simulate(CopulaFamily family, double tau, const MarginalSpec& t,
                                     const MarginalSpec& c, std::size_t n, std::uint64_t seed) {
  GenConfig cfg;
  cfg.copula = param_from_tau(family, tau);
  cfg.marginal_t = t;
  cfg.marginal_c = c;
  cfg.n = n;
  cfg.seed = seed;
  return censor(sample_pairs(cfg));
}

// Small settings that keep one estimate to a few seconds.
EstimatorOptions quick(std::uint64_t seed) {
  EstimatorOptions o;
  o.bag_replicates = 10;
  o.budget = 1000;
  o.weight_replicates = 60;
  o.region.fits_per_tau = 20;
  o.seed = seed;
  return o;
}

const auto kLnT = MarginalSpec::lognormal(2.2, 1.0);
const auto kLnC = MarginalSpec::lognormal(2.0, 0.25);
const auto kWeiT = MarginalSpec::weibull(0.63, 0.06);
const auto kWeiC = MarginalSpec::weibull(0.86, 0.04);

void check_invariants(const EstimateReport& r) {
  const double tau = r.theta_hat.tau;
  const double lo = r.voted_range.lo, hi = r.voted_range.hi;
  CHECK(tau >= lo);
  CHECK(tau <= hi);
  const auto coords = to_coords(r.theta_hat);
  CHECK(r.region.contains(std::span(coords).first(r.region.size())));
  CHECK(r.q_final <= r.q_start);
  std::size_t votes = 0;
  for (const auto& range : r.tally.ranges) votes += range.votes;
  CHECK(votes == r.tally.replicates - r.tally.skipped);
}

}  // namespace

TEST_CASE("tau ranges") {
  const auto& ranges = canonical_ranges();
  CHECK(ranges[0].lo == -0.1);
  CHECK(ranges[0].hi == 0.15);
  CHECK(ranges[3].lo == 0.65);
  CHECK(ranges[3].hi == 0.9);
  CHECK(ranges[1].label == RangeLabel::Low);
  CHECK(ranges[1].contains(0.4));
  CHECK_FALSE(ranges[1].contains(0.15));
  CHECK(to_string(RangeLabel::High) == "High");
  const auto normal = tau_search_interval(ranges[0], CopulaFamily::Normal);
  CHECK(normal.lower[0] < 0.0);
  CHECK(normal.upper[0] == 0.15);
  const auto clayton = tau_search_interval(ranges[0], CopulaFamily::Clayton);
  CHECK(clayton.lower[0] == 0.0);
  const auto high = tau_search_interval(ranges[3], CopulaFamily::Gumbel);
  CHECK(high.lower[0] > 0.65);
  CHECK(high.upper[0] == 0.9);
}

TEST_CASE("vote winner") {
  VoteTally t;
  t.ranges[1].votes = 4;
  t.ranges[2].votes = 4;
  t.ranges[3].votes = 2;
  t.ranges[1].mean_q = 0.8;
  t.ranges[2].mean_q = 0.3;
  CHECK(t.winner() == 2);
  t.ranges[1].mean_q = 0.1;
  CHECK(t.winner() == 1);
  t.ranges[3].votes = 5;
  CHECK(t.winner() == 3);
}

TEST_CASE("local stage") {
  const ModelSpec model{CopulaFamily::Normal, MarginalFamily::LogNormal, MarginalFamily::LogNormal, false};
  const ThetaVector truth{kLnT, kLnC, 0.5};
  const auto engine = MomentEngine::closed_form();
  const auto target = engine(model, truth);
  const Box box{{1.0, 0.2, 1.0, 0.01, 0.4}, {3.0, 2.0, 3.0, 0.2, 0.65}};
  BoxMinimizeOptions opts;

  SUBCASE("start at the minimizer") {
    const auto r = local_stage(model, to_coords(truth), box, target, WeightMatrix::identity(), engine, opts);
    CHECK(r.q_start == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(r.theta.tau == doctest::Approx(0.5).epsilon(1e-8));
  }

  SUBCASE("descends from a perturbed start") {
    const std::vector<double> start{2.4, 0.8, 2.1, 0.08, 0.6};
    const auto r = local_stage(model, start, box, target, WeightMatrix::identity(), engine, opts);
    CHECK(r.q_final < r.q_start);
    CHECK(r.q_final < 1e-8);
    CHECK(std::abs(r.theta.tau - 0.5) < 1e-3);
  }

  SUBCASE("non-finite start") {
    const Box wide{{1.0, 0.2, 1.0, 0.0, 0.4}, {3.0, 2.0, 3.0, 0.2, 0.65}};
    const std::vector<double> bad{2.2, 1.0, 2.0, 0.0, 0.5};
    CHECK_THROWS_AS(local_stage(model, bad, wide, target, WeightMatrix::identity(), engine, opts), Error);
  }
}

TEST_CASE("log-normal marginals with the normal copula") {
  const auto data = simulate(CopulaFamily::Normal, 0.5, kLnT, kLnC, 2000, 3);
  const auto r = estimate(data, CopulaFamily::Normal, MarginalFamily::LogNormal, MarginalFamily::LogNormal, quick(1));
  CHECK(r.engine == EngineKind::ClosedForm);
  CHECK(std::abs(r.theta_hat.tau - 0.5) < 0.1);
  CHECK(r.voted_range.label == RangeLabel::Moderate);
  check_invariants(r);

  SUBCASE("deterministic and blind to row order") {
    auto shuffled = data;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(6));
    const auto again = estimate(shuffled, CopulaFamily::Normal, MarginalFamily::LogNormal,
                                MarginalFamily::LogNormal, quick(1));
    CHECK(again.theta_hat.tau == r.theta_hat.tau);
    CHECK(to_coords(again.theta_hat) == to_coords(r.theta_hat));
    CHECK(again.q_final == r.q_final);
    for (std::size_t k = 0; k < 4; ++k) CHECK(again.tally.ranges[k].votes == r.tally.ranges[k].votes);
  }

  SUBCASE("threads do not change the result") {
    auto opts = quick(1);
    opts.threads = 3;
    const auto threaded = estimate(data, CopulaFamily::Normal, MarginalFamily::LogNormal, MarginalFamily::LogNormal, opts);
    CHECK(threaded.theta_hat.tau == r.theta_hat.tau);
  }
}

TEST_CASE("global stage votes") {
  const auto exp_t = MarginalSpec::exponential(0.025);
  const auto exp_c = MarginalSpec::exponential(0.039);
  const ModelSpec model{CopulaFamily::Normal, MarginalFamily::Exponential, MarginalFamily::Exponential, false};
  auto opts = quick(2);

  const auto high = simulate(CopulaFamily::Normal, 0.8, exp_t, exp_c, 500, 1);
  const auto high_region = feasible_region(high, CopulaFamily::Normal, model.family_t, model.family_c, opts.region);
  const auto tally_high = global_stage(high, model, high_region, opts);
  CHECK(tally_high.winner() == 3);
  CHECK(tally_high.replicates == opts.bag_replicates);

  const auto none = simulate(CopulaFamily::Normal, 0.0, exp_t, exp_c, 500, 1);
  const auto none_region = feasible_region(none, CopulaFamily::Normal, model.family_t, model.family_c, opts.region);
  CHECK(global_stage(none, model, none_region, opts).winner() == 0);
}

TEST_CASE("quadrature-backed estimates") {
  SUBCASE("weibull and log-normal marginals, high dependence") {
    const auto data = simulate(CopulaFamily::Normal, 0.8, kWeiT, kLnC, 500, 8);
    const auto r = estimate(data, CopulaFamily::Normal, MarginalFamily::Weibull, MarginalFamily::LogNormal, quick(3));
    CHECK(r.engine == EngineKind::Quadrature);
    // Five moments, five parameters: Q hits zero along a ridge in tau here, so
    // only the region pins tau down and single-dataset accuracy is not asserted.
    CHECK(r.theta_hat.tau > 0.0);
    check_invariants(r);
  }

  SUBCASE("clayton with weibull marginals") {
    const auto data = simulate(CopulaFamily::Clayton, 0.5, kWeiT, kWeiC, 2000, 9);
    const auto r = estimate(data, CopulaFamily::Clayton, MarginalFamily::Weibull, MarginalFamily::Weibull, quick(4));
    CHECK(std::abs(r.theta_hat.tau - 0.5) < 0.1);
    check_invariants(r);
  }
}

TEST_CASE("independence family fixes tau at zero") {
  const auto data = simulate(CopulaFamily::Independence, 0.0, kWeiT, kWeiC, 500, 12);
  const auto r = estimate(data, CopulaFamily::Independence, MarginalFamily::Weibull, MarginalFamily::Weibull,
                          quick(6));
  CHECK(r.theta_hat.tau == 0.0);
  CHECK(r.q_final <= r.q_start);
  CHECK(tau_search_interval(canonical_ranges()[2], CopulaFamily::Independence).upper[0] == 0.0);
}

TEST_CASE("negative dependence") {
  SUBCASE("normal copula") {
    const auto data = simulate(CopulaFamily::Normal, -0.5, kLnT, kLnC, 2000, 10);
    auto opts = quick(5);
    opts.negative_dependence = true;
    const auto r = estimate(data, CopulaFamily::Normal, MarginalFamily::LogNormal, MarginalFamily::LogNormal, opts);
    CHECK(std::abs(r.theta_hat.tau + 0.5) < 0.1);
    CHECK(r.voted_range.hi <= -0.4 + 1e-12);
    CHECK(r.theta_hat.tau >= r.voted_range.lo);
    CHECK(r.theta_hat.tau <= r.voted_range.hi);
  }

  SUBCASE("rotated clayton") {
    // Clayton pair with the censoring uniform reflected: negative dependence.
    const auto cop = param_from_tau(CopulaFamily::Clayton, 0.5);
    const auto t = MarginalSpec::weibull(1.2, 0.05);
    const auto c = MarginalSpec::exponential(0.04);
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> unif(1e-12, 1.0 - 1e-12);
    std::vector<LatentPair> pairs(2000);
    for (auto& p : pairs) {
      const double u = unif(gen);
      const double v = conditional_inverse(cop, u, unif(gen));
      p = {inverse_survival(t, u), inverse_survival(c, 1.0 - v)};
    }
    const auto data = censor(pairs);
    auto opts = quick(6);
    opts.negative_dependence = true;
    const auto r = estimate(data, CopulaFamily::Clayton, MarginalFamily::Weibull, MarginalFamily::Exponential, opts);
    CHECK(std::abs(r.theta_hat.tau + 0.5) < 0.12);
    CHECK(r.model.rotated);
  }

  CHECK_THROWS_AS(estimate(simulate(CopulaFamily::Normal, 0.0, kLnT, kLnC, 200, 1), CopulaFamily::Independence,
                           MarginalFamily::LogNormal, MarginalFamily::LogNormal,
                           [] { auto o = quick(1); o.negative_dependence = true; return o; }()),
                  ConfigError);
}

TEST_CASE("estimation failures") {
  std::vector<SurvivalRecord> all_events;
  for (int i = 1; i <= 50; ++i) all_events.push_back({0.1 * i, 1});
  CHECK_THROWS_AS(estimate(all_events, CopulaFamily::Clayton, MarginalFamily::Weibull, MarginalFamily::Weibull, quick(1)),
                  MomentUndefinedError);

  auto opts = quick(1);
  opts.engine = EngineKind::ClosedForm;
  const auto data = simulate(CopulaFamily::Clayton, 0.3, kWeiT, kWeiC, 300, 2);
  CHECK_THROWS_AS(estimate(data, CopulaFamily::Clayton, MarginalFamily::Weibull, MarginalFamily::Weibull, opts),
                  ConfigError);
}
