#include "depcen/inference.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "depcen/error.hpp"
#include "depcen/parallel.hpp"
#include "depcen/rng.hpp"

namespace depcen {

TauEstimator gmm_estimator(CopulaFamily copula, MarginalFamily family_t, MarginalFamily family_c,
                           EstimatorOptions options) {
  options.threads = 1;
  return [=](std::span<const SurvivalRecord> data, std::uint64_t seed) {
    EstimatorOptions local = options;
    local.seed = seed;
    return estimate(data, copula, family_t, family_c, local).theta_hat.tau;
  };
}

TauEstimator mle_estimator(CopulaFamily copula, MarginalFamily family_t, MarginalFamily family_c,
                           MleOptions options) {
  return [=](std::span<const SurvivalRecord> data, std::uint64_t) {
    return mle_fit(data, copula, family_t, family_c, options).theta_hat.tau;
  };
}

std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t B, double alpha) {
  if (B == 0) throw InferenceError("percentile ranks: no replicates");
  const double b = static_cast<double>(B);
  // The small offsets absorb floating error in products such as 200 * 0.025.
  auto lo = static_cast<std::size_t>(std::ceil(b * alpha / 2.0 - 1e-9));
  auto hi = static_cast<std::size_t>(std::floor(b * (1.0 - alpha / 2.0) + 1e-9));
  lo = std::clamp<std::size_t>(lo, 1, B);
  hi = std::clamp<std::size_t>(hi, lo, B);
  return {lo, hi};
}

BootstrapSummary summarize_bootstrap(double point_estimate, std::vector<double> estimates,
                                     std::size_t B, double alpha, std::optional<double> truth) {
  if (estimates.empty()) throw InferenceError("bootstrap: every replicate failed");
  BootstrapSummary s;
  s.point_estimate = point_estimate;
  s.B = B;
  s.alpha = alpha;
  s.failures = B - estimates.size();
  const double k = static_cast<double>(estimates.size());
  const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / k;
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  s.se = estimates.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
  const auto [mn, mx] = std::minmax_element(estimates.begin(), estimates.end());
  if (*mn == *mx) s.se = 0.0;  // rounding in the mean otherwise leaves ~1e-16
  if (truth) {
    double abs_err = 0.0;
    for (double e : estimates) abs_err += std::abs(e - *truth);
    s.mae = abs_err / k;
  }
  std::vector<double> sorted = estimates;
  std::sort(sorted.begin(), sorted.end());
  const auto [lo, hi] = percentile_ranks(sorted.size(), alpha);
  s.lo_rank = lo;
  s.hi_rank = hi;
  s.ci_lo = sorted[lo - 1];
  s.ci_hi = sorted[hi - 1];
  s.estimates = std::move(estimates);
  return s;
}

BootstrapSummary bootstrap_tau(std::span<const SurvivalRecord> data, const TauEstimator& point,
                               const TauEstimator& replicate, const BootstrapOptions& options) {
  if (options.B < 2) throw ConfigError("bootstrap: B must be at least 2");
  if (!(options.alpha > 0.0 && options.alpha < 0.5)) {
    throw ConfigError("bootstrap: alpha must lie in (0, 0.5)");
  }
  const auto sorted = canonical_order(data);
  const Rng master(options.seed);
  const double point_estimate = point(sorted, master.split(0).key());

  std::vector<std::optional<double>> results(options.B);
  parallel_for(options.B, options.threads, [&](std::size_t b) {
    Rng rng = master.split(1 + 2 * b);
    const auto sample = resample(sorted, rng);
    try {
      const double tau = replicate(sample, master.split(2 + 2 * b).key());
      if (std::isfinite(tau)) results[b] = tau;
    } catch (const Error&) {
    }
  });
  std::vector<double> estimates;
  for (const auto& r : results) {
    if (r) estimates.push_back(*r);
  }
  const std::size_t failures = options.B - estimates.size();
  if (5 * failures > options.B) {
    throw InferenceError("bootstrap: " + std::to_string(failures) + " of " +
                         std::to_string(options.B) + " replicates failed");
  }
  return summarize_bootstrap(point_estimate, std::move(estimates), options.B, options.alpha,
                             options.truth);
}

std::string_view to_string(Method method) noexcept {
  return method == Method::Gmm ? "gmm" : "mle";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "gmm" || lower == "proposed") return Method::Gmm;
  if (lower == "mle") return Method::Mle;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected gmm or mle)");
}

GenConfig cell_generator(const StudyCell& cell, std::uint64_t seed) {
  GenConfig g;
  g.copula = copula_at(cell.copula, cell.tau);
  g.marginal_t = cell.marginal_t;
  g.marginal_c = cell.marginal_c;
  g.n = cell.n;
  g.seed = seed;
  g.rct = cell.rct;
  return g;
}

std::vector<SurvivalRecord> simulate_cell(const StudyCell& cell, std::uint64_t seed) {
  const GenConfig g = cell_generator(cell, seed);
  if (g.rct) return pool_arms(sample_rct(g));
  const auto pairs = sample_pairs(g);
  return censor(pairs);
}

StudySummary summarize_runs(const StudyCell& cell, std::vector<RunRecord> records) {
  StudySummary s;
  s.cell = cell;
  s.runs = records.size();
  std::vector<double> est;
  double abs_err = 0.0;
  double pct_err = 0.0;
  double se_sum = 0.0;
  std::size_t covered = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++s.failed_runs;
      continue;
    }
    est.push_back(r.estimate);
    abs_err += std::abs(r.estimate - cell.tau);
    if (cell.tau != 0.0) pct_err += (cell.tau - r.estimate) / cell.tau * 100.0;
    se_sum += r.se;
    if (r.covered) ++covered;
  }
  s.failed = s.runs == 0 || 5 * s.failed_runs > s.runs || est.empty();
  if (!est.empty()) {
    const double k = static_cast<double>(est.size());
    s.mean_estimate = std::accumulate(est.begin(), est.end(), 0.0) / k;
    s.mae = abs_err / k;
    double ss = 0.0;
    for (double e : est) ss += (e - s.mean_estimate) * (e - s.mean_estimate);
    s.empirical_se = est.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    s.coverage_percent = 100.0 * static_cast<double>(covered) / k;
    s.mean_bootstrap_se = se_sum / k;
    if (cell.tau != 0.0) s.mpe = pct_err / k;
  }
  s.records = std::move(records);
  return s;
}

std::vector<StudySummary> monte_carlo_study(const StudyConfig& config) {
  if (config.runs < 1) throw ConfigError("study: runs must be at least 1");
  if (config.inner_B < 2) throw ConfigError("study: inner bootstrap size must be at least 2");
  const std::size_t cells = config.cells.size();
  const std::size_t runs = config.runs;
  std::vector<RunRecord> records(cells * runs);
  const Rng master(config.seed);

  parallel_for(cells * runs, config.threads, [&](std::size_t task) {
    const std::size_t c = task / runs;
    const std::size_t run = task % runs;
    const StudyCell& cell = config.cells[c];
    const Rng stream = master.split(c).split(run);
    RunRecord& rec = records[task];
    rec.run = run;
    try {
      const auto data = simulate_cell(cell, stream.split(0).key());
      double events = 0.0;
      for (const auto& r : data) events += r.delta;
      rec.event_fraction = events / static_cast<double>(data.size());

      const MarginalFamily ft = cell.marginal_t.family();
      const MarginalFamily fc = cell.marginal_c.family();
      TauEstimator point;
      TauEstimator replicate;
      if (cell.method == Method::Mle) {
        point = mle_estimator(cell.copula, ft, fc);
        replicate = point;
      } else {
        EstimatorOptions point_opts = config.point_options;
        EstimatorOptions boot_opts = config.bootstrap_options;
        if (config.reuse_region) {
          RegionOptions ro = point_opts.region;
          ro.seed = stream.split(3).key();
          ro.threads = 1;
          ro.negative_dependence = point_opts.negative_dependence;
          const auto region = feasible_region(canonical_order(data), cell.copula, ft, fc, ro);
          point_opts.region_override = region;
          boot_opts.region_override = region;
        }
        point = gmm_estimator(cell.copula, ft, fc, point_opts);
        replicate = gmm_estimator(cell.copula, ft, fc, boot_opts);
      }
      BootstrapOptions bo;
      bo.B = config.inner_B;
      bo.alpha = config.alpha;
      bo.seed = stream.split(1).key();
      bo.threads = 1;
      bo.truth = cell.tau;
      const BootstrapSummary bs = bootstrap_tau(data, point, replicate, bo);
      rec.estimate = bs.point_estimate;
      rec.se = bs.se;
      rec.ci_lo = bs.ci_lo;
      rec.ci_hi = bs.ci_hi;
      rec.covered = bs.ci_lo <= cell.tau && cell.tau <= bs.ci_hi;
      rec.bootstrap_mae = bs.mae.value_or(0.0);
      rec.ok = true;
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  std::vector<StudySummary> out;
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<RunRecord> cell_records(records.begin() + static_cast<std::ptrdiff_t>(c * runs),
                                        records.begin() + static_cast<std::ptrdiff_t>((c + 1) * runs));
    out.push_back(summarize_runs(config.cells[c], std::move(cell_records)));
  }
  return out;
}

}  // namespace depcen
