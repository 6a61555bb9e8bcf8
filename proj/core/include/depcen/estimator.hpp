#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "depcen/anneal.hpp"
#include "depcen/cg.hpp"
#include "depcen/moments.hpp"
#include "depcen/optimize.hpp"

namespace depcen {

enum class RangeLabel { None, Low, Moderate, High };

std::string_view to_string(RangeLabel label) noexcept;

/// Half-open tau interval (lo, hi].
struct TauRange {
  double lo = 0.0;
  double hi = 0.0;
  RangeLabel label = RangeLabel::None;

  [[nodiscard]] bool contains(double tau) const noexcept { return tau > lo && tau <= hi; }
};

/// (-0.1, 0.15], (0.15, 0.4], (0.4, 0.65], (0.65, 0.9].
const std::array<TauRange, 4>& canonical_ranges() noexcept;

/// Search interval for tau within a range. Families without negative
/// dependence start at zero.
Box tau_search_interval(const TauRange& range, CopulaFamily family);

struct RangeTally {
  std::size_t votes = 0;
  /// Lowest replicate minimum seen in this range and where it was found.
  double best_q = std::numeric_limits<double>::infinity();
  std::vector<double> best_coords;
  /// Mean of the per-replicate minima, used to break vote ties.
  double mean_q = std::numeric_limits<double>::infinity();
  /// Replicate minimizers in this range, kept to seed the local stage.
  std::vector<std::vector<double>> candidates;
};

struct VoteTally {
  std::array<RangeTally, 4> ranges;
  std::size_t replicates = 0;
  std::size_t skipped = 0;

  /// Most votes; ties go to the lower mean replicate minimum.
  [[nodiscard]] std::size_t winner() const;
};

struct EstimatorOptions {
  /// Bagging replicates in the global stage.
  std::size_t bag_replicates = 50;
  /// Objective evaluations per replicate and range; 0 picks 3000, or 1500
  /// for the Monte-Carlo engine.
  int budget = 0;
  /// Bootstrap size for the weight matrix of the data itself.
  std::size_t weight_replicates = 100;
  /// Bootstrap size for the weight matrix of each bagging replicate.
  std::size_t inner_weight_replicates = 20;
  /// Empty picks the closed form when it applies and quadrature otherwise.
  std::optional<EngineKind> engine;
  QuadratureOptions search_quadrature{0.12, 8.0};
  QuadratureOptions final_quadrature{0.05, 8.5};
  std::size_t mc_draws_search = 100000;
  std::size_t mc_draws_final = 1000000;
  RegionOptions region;
  /// Skip the region construction and search this box instead.
  std::optional<FeasibleRegion> region_override;
  AnnealOptions anneal;
  BoxMinimizeOptions local;
  /// Estimate a negative tau by modelling the dependence of T and a
  /// decreasing transform of C; the reported tau carries the sign.
  bool negative_dependence = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct EstimateReport {
  ModelSpec model;
  ThetaVector theta_hat;
  TauRange voted_range;
  VoteTally tally;
  FeasibleRegion region;
  MomentVector sample;
  WeightMatrix weights;
  double q_start = 0.0;
  double q_final = 0.0;
  int local_iterations = 0;
  bool converged = false;
  EngineKind engine = EngineKind::ClosedForm;
  std::uint64_t seed = 0;
};

/// Engine implied by the options for a model (search or final precision).
MomentEngine make_engine(const ModelSpec& model, const EstimatorOptions& options, bool final_stage);

/// Bagged annealing over the four tau ranges.
VoteTally global_stage(std::span<const SurvivalRecord> data, const ModelSpec& model,
                       const FeasibleRegion& region, const EstimatorOptions& options);

struct LocalResult {
  ThetaVector theta;
  double q_start = 0.0;
  double q_final = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Bounded refinement of Q_n from `start` inside `box`.
LocalResult local_stage(const ModelSpec& model, std::span<const double> start, const Box& box,
                        const MomentVector& target, const WeightMatrix& weights,
                        const MomentEngine& engine, const BoxMinimizeOptions& options);

/// Feasible region, global stage, local stage.
EstimateReport estimate(std::span<const SurvivalRecord> data, CopulaFamily copula,
                        MarginalFamily family_t, MarginalFamily family_c,
                        const EstimatorOptions& options = {});

}  // namespace depcen
