#include "depcen/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include "depcen/error.hpp"

namespace depcen {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSqrt2 = 1.41421356237309504880;
}  // namespace

double normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must lie in (0,1), got " + std::to_string(p));
  }
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bivariate_normal_cdf(double h, double k, double rho) {
  if (!(rho > -1.0 && rho < 1.0)) {
    throw DomainError("bivariate_normal_cdf: rho must lie in (-1,1)");
  }
  if (std::isinf(h) || std::isinf(k)) {
    if (h == -INFINITY || k == -INFINITY) return 0.0;
    if (h == INFINITY) return normal_cdf(k);
    return normal_cdf(h);
  }
  const double r = std::sqrt((1.0 - rho) * (1.0 + rho));
  if (h == 0.0 && k == 0.0) return 0.25 + std::asin(rho) / (2.0 * kPi);
  if (h == 0.0) return 0.5 * normal_cdf(k) - boost::math::owens_t(k, -rho / r);
  if (k == 0.0) return 0.5 * normal_cdf(h) - boost::math::owens_t(h, -rho / r);

  const double a_h = (k - rho * h) / (h * r);
  const double a_k = (h - rho * k) / (k * r);
  const double beta = (h * k > 0.0) ? 0.0 : 0.5;
  const double value = 0.5 * (normal_cdf(h) + normal_cdf(k)) - boost::math::owens_t(h, a_h) -
                       boost::math::owens_t(k, a_k) - beta;
  return std::clamp(value, 0.0, 1.0);
}

double debye1(double x) {
  if (x == 0.0) return 1.0;
  if (x < 0.0) return debye1(-x) - 0.5 * x;
  auto integrand = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, x, 20, 1e-12, &error);
  return integral / x;
}

UnitIntervalRule make_tanh_sinh_rule(double h, double t_max) {
  UnitIntervalRule rule;
  const int half = static_cast<int>(std::floor(t_max / h));
  for (int i = -half; i <= half; ++i) {
    const double t = i * h;
    const double q = 0.5 * kPi * std::sinh(t);
    const double dq = 0.5 * kPi * std::cosh(t);
    // x = (1 + tanh q) / 2 = 1 / (1 + e^{-2q}); 1 - x = 1 / (1 + e^{2q})
    const double x = 1.0 / (1.0 + std::exp(-2.0 * q));
    const double xc = 1.0 / (1.0 + std::exp(2.0 * q));
    const double c = std::cosh(q);
    const double w = h * dq / (2.0 * c * c);
    if (x <= 0.0 || xc <= 0.0 || w == 0.0) continue;
    rule.node.push_back(x);
    rule.complement.push_back(xc);
    rule.weight.push_back(w);
  }
  return rule;
}

}  // namespace depcen
