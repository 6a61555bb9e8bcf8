#pragma once

#include <cstdint>

#include "depcen/optimize.hpp"

namespace depcen {

/// Generalized simulated annealing settings. Defaults are the usual GenSA
/// values.
struct AnnealOptions {
  double visiting_param = 2.62;
  double acceptance_param = -5.0;
  double initial_temp = 5230.0;
  /// Reannealing starts once the temperature falls below this fraction of
  /// the initial temperature.
  double restart_temp_ratio = 2e-5;
  /// Polish each new incumbent with a short projected quasi-Newton run.
  bool local_search = true;
  /// Evaluation cap for one polish, per coordinate.
  int local_evaluations_per_dim = 60;
};

/// Minimizes f over the box within `budget` evaluations. Non-finite values
/// count as +infinity. Visiting moves that leave the box are reflected back.
/// Exhausting the budget returns the best point seen.
OptimResult anneal(const ObjectiveFn& f, const Box& box, int budget, std::uint64_t seed,
                   const AnnealOptions& options = {});

}  // namespace depcen
