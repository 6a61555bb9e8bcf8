#pragma once

#include <optional>
#include <span>

#include "depcen/cg.hpp"
#include "depcen/moments.hpp"
#include "depcen/optimize.hpp"

namespace depcen {

/// Sum over subjects of delta log[C_u(S_T, S_C) f_T] + (1 - delta)
/// log[C_v(S_T, S_C) f_C] at each observed time, with log arguments floored
/// at 1e-300. Throws NumericError if the result is not finite.
double composite_log_likelihood(const ThetaVector& theta, CopulaFamily family,
                                std::span<const SurvivalRecord> data, bool rotated = false);

/// Parametric MLE of one marginal treating the other outcome as independent
/// censoring.
MarginalSpec independent_fit(std::span<const SurvivalRecord> data, MarginalFamily family,
                             Target target);

struct MleOptions {
  /// Defaults to independent marginal fits and tau = 0.4.
  std::optional<ThetaVector> start;
  /// Natural-scale box over (marginal coordinates, tau); defaults to the
  /// start's marginals scaled by e^{+-4} (mu by +-4 sigma) and the family's
  /// admissible tau range.
  std::optional<Box> bounds;
  BoxMinimizeOptions optimizer{500, 1e-8, 1e-6, 0};
};

struct MleFit {
  ThetaVector theta_hat;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

MleFit mle_fit(std::span<const SurvivalRecord> data, CopulaFamily family, MarginalFamily family_t,
               MarginalFamily family_c, const MleOptions& options = {});

}  // namespace depcen
