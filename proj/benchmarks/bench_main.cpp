#include <benchmark/benchmark.h>

#include "depcen/cg.hpp"
#include "depcen/copula.hpp"
#include "depcen/datagen.hpp"
#include "depcen/estimator.hpp"
#include "depcen/moments.hpp"

using namespace depcen;

namespace {

const CopulaFamily kFamilies[] = {CopulaFamily::Normal, CopulaFamily::Clayton, CopulaFamily::Gumbel,
                                  CopulaFamily::Frank};

std::vector<SurvivalRecord> dataset(std::size_t n, std::uint64_t seed) {
  GenConfig g;
  g.copula = copula_at(CopulaFamily::Normal, 0.5);
  g.marginal_t = MarginalSpec::lognormal(2.2, 1.0);
  g.marginal_c = MarginalSpec::lognormal(2.0, 0.25);
  g.n = n;
  g.seed = seed;
  return censor(sample_pairs(g));
}

const ThetaVector kTheta{MarginalSpec::lognormal(2.2, 1.0), MarginalSpec::lognormal(2.0, 0.25), 0.5};

void BM_CopulaCdf(benchmark::State& state) {
  const auto c = copula_at(kFamilies[state.range(0)], 0.5);
  double u = 0.013;
  for (auto _ : state) {
    u = u > 0.98 ? 0.013 : u + 0.0071;
    benchmark::DoNotOptimize(cdf(c, {u, 1.0 - u * 0.5}));
  }
  state.SetLabel(std::string(to_string(c.family())));
}
BENCHMARK(BM_CopulaCdf)->DenseRange(0, 3);

void BM_CopulaPartial(benchmark::State& state) {
  const auto c = copula_at(kFamilies[state.range(0)], 0.5);
  double u = 0.013;
  for (auto _ : state) {
    u = u > 0.98 ? 0.013 : u + 0.0071;
    benchmark::DoNotOptimize(partial_u(c, {u, 1.0 - u * 0.5}));
  }
  state.SetLabel(std::string(to_string(c.family())));
}
BENCHMARK(BM_CopulaPartial)->DenseRange(0, 3);

void BM_MomentsClosed(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(theoretical_moments_normal(kTheta));
}
BENCHMARK(BM_MomentsClosed);

void BM_MomentsQuadrature(benchmark::State& state) {
  const auto family = kFamilies[state.range(0)];
  for (auto _ : state) benchmark::DoNotOptimize(theoretical_moments_quadrature(family, kTheta));
  state.SetLabel(std::string(to_string(family)));
}
BENCHMARK(BM_MomentsQuadrature)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_MomentsMc(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(theoretical_moments_mc(CopulaFamily::Normal, kTheta, m, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MomentsMc)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_CgSurvival(benchmark::State& state) {
  const auto data = dataset(static_cast<std::size_t>(state.range(0)), 3);
  const auto c = copula_at(CopulaFamily::Clayton, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(cg_survival(data, c, Target::T));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CgSurvival)->RangeMultiplier(4)->Range(500, 8000)->Complexity()->Unit(benchmark::kMicrosecond);

void BM_Estimate(benchmark::State& state) {
  const auto data = dataset(500, 5);
  EstimatorOptions o;
  o.bag_replicates = 4;
  o.budget = 300;
  o.weight_replicates = 20;
  o.region.fits_per_tau = 8;
  o.threads = 1;
  o.region.threads = 1;
  o.seed = 11;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate(data, CopulaFamily::Normal, MarginalFamily::LogNormal, MarginalFamily::LogNormal, o));
  }
}
BENCHMARK(BM_Estimate)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
