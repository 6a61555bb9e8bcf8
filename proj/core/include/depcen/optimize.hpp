#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace depcen {

using ObjectiveFn = std::function<double(std::span<const double>)>;

/// Axis-aligned box [lower, upper].
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] std::size_t size() const noexcept { return lower.size(); }
  [[nodiscard]] bool contains(std::span<const double> x) const noexcept;
  void project(std::span<double> x) const noexcept;
  /// Throws ConfigError unless lower <= upper component-wise and all finite.
  void validate() const;
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  int max_evaluations = 4000;
  /// Stop when the spread of simplex values falls below this (absolute).
  double f_tolerance = 1e-12;
  double x_tolerance = 1e-10;
  /// Initial simplex edge per coordinate (absolute; box-relative if a box is given).
  double initial_step = 0.1;
};

/// Nelder-Mead simplex (adaptive coefficients of Gao and Han). With a box,
/// trial points are projected onto it.
OptimResult nelder_mead(const ObjectiveFn& f, std::vector<double> start,
                        const NelderMeadOptions& options = {}, const Box* box = nullptr);

struct BoxMinimizeOptions {
  int max_iterations = 500;
  /// Converged once an accepted step lowers f by less than this.
  double f_tolerance = 1e-8;
  /// Central-difference step in box-normalized coordinates.
  double gradient_step = 1e-6;
  /// Hard cap on objective calls; 0 means unlimited.
  int max_evaluations = 0;
};

/// Projected quasi-Newton (BFGS) descent on a box with finite-difference
/// gradients, run in coordinates normalized to the unit cube.
OptimResult minimize_box(const ObjectiveFn& f, std::vector<double> start, const Box& box,
                         const BoxMinimizeOptions& options = {});

}  // namespace depcen
