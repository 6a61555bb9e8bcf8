#pragma once

#include <vector>

namespace depcen {

inline constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;
/// Inverse standard normal CDF; p must lie in (0, 1).
double normal_quantile(double p);

/// Standard bivariate normal CDF Pr(Z1 <= h, Z2 <= k) with correlation rho.
///
/// Evaluated through Owen's T function, which Boost.Math
/// computes to double precision; absolute error is well below 1e-12.
double bivariate_normal_cdf(double h, double k, double rho);

/// Order-1 Debye function D1(x) = (1/x) * integral_0^x t / (e^t - 1) dt.
/// Adaptive Gauss-Kronrod quadrature with relative tolerance 1e-10.
double debye1(double x);

/// Fixed tanh-sinh (double-exponential) rule on (0, 1).
///
/// Nodes never touch the endpoints and `complement` holds 1 - node computed
/// without cancellation, which matters near 1.
struct UnitIntervalRule {
  std::vector<double> node;
  std::vector<double> complement;
  std::vector<double> weight;

  [[nodiscard]] std::size_t size() const noexcept { return node.size(); }
};

/// Builds the rule with step h on the truncated range |t| <= t_max.
UnitIntervalRule make_tanh_sinh_rule(double h, double t_max);

}  // namespace depcen
