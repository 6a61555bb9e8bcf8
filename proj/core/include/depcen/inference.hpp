#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depcen/datagen.hpp"
#include "depcen/estimator.hpp"
#include "depcen/mle.hpp"

namespace depcen {

/// Point estimator of tau on a dataset; the seed drives any internal
/// randomness.
using TauEstimator = std::function<double(std::span<const SurvivalRecord>, std::uint64_t seed)>;

/// Proposed estimator with fixed options (the seed is replaced per call).
TauEstimator gmm_estimator(CopulaFamily copula, MarginalFamily family_t, MarginalFamily family_c,
                           EstimatorOptions options);
/// Composite-likelihood MLE.
TauEstimator mle_estimator(CopulaFamily copula, MarginalFamily family_t, MarginalFamily family_c,
                           MleOptions options = {});

struct BootstrapSummary {
  double point_estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t B = 0;
  double alpha = 0.05;
  /// 1-based ranks of the CI endpoints among the successful replicates.
  std::size_t lo_rank = 0;
  std::size_t hi_rank = 0;
  std::size_t failures = 0;
  /// Mean |estimate - truth| over replicates, when the truth is known.
  std::optional<double> mae;
  /// Replicate estimates in replicate order (failures omitted).
  std::vector<double> estimates;
};

/// Percentile ranks ceil(B alpha / 2) and floor(B (1 - alpha / 2)), kept within [1, B].
std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t B, double alpha);

/// Summary of replicate estimates around a point estimate.
BootstrapSummary summarize_bootstrap(double point_estimate, std::vector<double> estimates,
                                     std::size_t B, double alpha,
                                     std::optional<double> truth = std::nullopt);

struct BootstrapOptions {
  std::size_t B = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<double> truth;
};

/// Estimates on the data and on B resamples of it. More than 20% failed
/// replicates raises InferenceError.
BootstrapSummary bootstrap_tau(std::span<const SurvivalRecord> data, const TauEstimator& point,
                               const TauEstimator& replicate, const BootstrapOptions& options);

enum class Method { Gmm, Mle };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);

/// One grid cell of a simulation study.
struct StudyCell {
  std::string name;
  CopulaFamily copula = CopulaFamily::Normal;
  double tau = 0.0;
  MarginalSpec marginal_t;
  MarginalSpec marginal_c;
  std::size_t n = 500;
  std::optional<RctConfig> rct;
  Method method = Method::Gmm;
};

struct StudyConfig {
  std::vector<StudyCell> cells;
  std::size_t runs = 30;
  std::size_t inner_B = 30;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Used for the estimate on each generated dataset.
  EstimatorOptions point_options;
  /// Used inside the per-run bootstrap.
  EstimatorOptions bootstrap_options;
  /// Bootstrap replicates search the region built on the run's data.
  bool reuse_region = true;
};

struct RunRecord {
  std::size_t run = 0;
  bool ok = false;
  std::string error;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
  /// Mean |replicate - truth| over the run's bootstrap.
  double bootstrap_mae = 0.0;
  double event_fraction = 0.0;
};

struct StudySummary {
  StudyCell cell;
  std::size_t runs = 0;
  std::size_t failed_runs = 0;
  bool failed = false;
  double mean_estimate = 0.0;
  double mae = 0.0;
  double empirical_se = 0.0;
  double coverage_percent = 0.0;
  /// Absent when the true tau is zero.
  std::optional<double> mpe;
  double mean_bootstrap_se = 0.0;
  std::vector<RunRecord> records;
};

/// Per cell: fresh data per run, point estimate, percentile bootstrap.
std::vector<StudySummary> monte_carlo_study(const StudyConfig& config);

/// Data-generating configuration of a cell for a given run seed.
GenConfig cell_generator(const StudyCell& cell, std::uint64_t seed);

/// Simulated observed data for a cell (arms pooled in the treatment scenario).
std::vector<SurvivalRecord> simulate_cell(const StudyCell& cell, std::uint64_t seed);

/// Mean, MAE, empirical SE, CP and MPE from per-run records.
StudySummary summarize_runs(const StudyCell& cell, std::vector<RunRecord> records);

}  // namespace depcen
