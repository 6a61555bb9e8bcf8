#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "depcen/estimator.hpp"
#include "depcen/inference.hpp"
#include "depcen/mle.hpp"

namespace depcen {

using Json = nlohmann::ordered_json;

Json marginal_json(const MarginalSpec& m);
Json theta_json(const ThetaVector& theta);
Json options_json(const EstimatorOptions& options);

/// Proposed-method report; `method` is "gmm".
Json estimate_json(const EstimateReport& report, const EstimatorOptions& options);
/// Same top-level shape with method "mle".
Json mle_json(const MleFit& fit, const ModelSpec& model, std::uint64_t seed);
Json bootstrap_json(const BootstrapSummary& summary);
Json study_json(std::span<const StudySummary> summaries, const StudyConfig& config);

/// One row per cell: cell, copula, marginals, n, true_tau, runs, failed,
/// mean_estimate, mae, empirical_se, cp, mpe, mean_bootstrap_se.
void write_study_csv(std::ostream& out, std::span<const StudySummary> summaries);

/// Single-dataset layout, one row per cell from its first run: cell, copula,
/// marginals, n, true_tau, point_estimate, bootstrap_mae, bootstrap_se,
/// ci_lo, ci_hi.
void write_single_dataset_csv(std::ostream& out, std::span<const StudySummary> summaries);

/// Two-space indented JSON with a trailing newline.
std::string dump(const Json& j);

}  // namespace depcen
