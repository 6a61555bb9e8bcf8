#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "depcen/copula.hpp"
#include "depcen/datagen.hpp"
#include "depcen/marginal.hpp"

namespace depcen {

enum class Target { T, C };

/// Right-continuous step function: survival drops to `survival` at `time`.
struct SurvivalCurve {
  std::vector<CurvePoint> steps;

  /// Survival just after time t (1 before the first step).
  [[nodiscard]] double at(double t) const noexcept;
  /// Throws DomainError unless times increase and survival is nonincreasing in [0,1].
  void validate() const;
};

/// Copula-graphic estimate of the marginal survival of T (or of C, with the
/// roles of delta swapped) under an Archimedean or independence copula.
/// Tied target events at one time are processed one after another, which
/// produces a single step at that time.
SurvivalCurve cg_survival(std::span<const SurvivalRecord> data, const CopulaSpec& copula,
                          Target target);

/// Rectangular search box for the marginal coordinates, T's first then C's
/// (exponential: rate; Weibull: shape, scale; log-normal: mu, sigma^2).
struct FeasibleRegion {
  MarginalFamily family_t = MarginalFamily::Exponential;
  MarginalFamily family_c = MarginalFamily::Exponential;
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] std::size_t size() const noexcept { return lower.size(); }
  [[nodiscard]] bool contains(std::span<const double> coords) const noexcept;
};

struct RegionOptions {
  std::vector<double> representative_taus{0.0, 0.3, 0.5, 0.8};
  /// Bootstrap refits per representative tau; 0 fits the data once.
  std::size_t fits_per_tau = 200;
  /// Curves are thinned to this many evenly spaced steps before fitting.
  std::size_t max_fit_points = 60;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Build the curves at -tau for each representative tau.
  bool negative_dependence = false;
  /// Each fence is widened to cover mean +- this many bootstrap SDs of the
  /// fits at every representative tau. 0 keeps the bare quartile fences.
  double spread_sds = 2.0;
};

/// Copula used for the CG curves of a model family at tau: the family itself
/// when Archimedean, Clayton for the Normal copula, independence at tau 0.
/// With `negative` set, Frank at -tau for every family: it is the one
/// Archimedean family here that reaches negative dependence.
CopulaSpec cg_copula_for(CopulaFamily family, double tau, bool negative = false);

/// Fits both marginal families to CG curves at each representative tau and
/// turns the per-tau mean coordinates into interquartile fences.
FeasibleRegion feasible_region(std::span<const SurvivalRecord> data, CopulaFamily copula_family,
                               MarginalFamily family_t, MarginalFamily family_c,
                               const RegionOptions& options = {});

/// Fences [Q1 - 1.5 IQR, Q3 + 1.5 IQR] per coordinate across the per-tau
/// estimates. A zero-width fence is widened by 10% of the value; positive
/// coordinates are floored at 1e-6.
FeasibleRegion region_from_estimates(std::span<const std::vector<double>> per_tau,
                                     MarginalFamily family_t, MarginalFamily family_c);

}  // namespace depcen
