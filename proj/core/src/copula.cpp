#include "depcen/copula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "depcen/error.hpp"
#include "depcen/special.hpp"

namespace depcen {

namespace {

constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_unit(double x) noexcept { return std::clamp(x, kClampLo, kClampHi); }

// log(e^a + e^b - 1) for a, b >= 0 without overflow.
double log_sum_exp_minus_one(double a, double b) noexcept {
  const double m = std::max(a, b);
  if (m < 30.0) return std::log1p(std::expm1(a) + std::expm1(b));
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

// Clayton: with a = -theta log u, b = -theta log v, C = exp(-L / theta) where
// L = log(u^-theta + v^-theta - 1), and log C_u = (theta + 1) / theta * (a - L).
double clayton_partial(double theta, double u, double v) noexcept {
  const double a = -theta * std::log(u);
  const double b = -theta * std::log(v);
  const double big_l = log_sum_exp_minus_one(a, b);
  return std::exp((theta + 1.0) / theta * (a - big_l));
}

double gumbel_partial(double theta, double u, double v) noexcept {
  const double x = -std::log(u);
  const double y = -std::log(v);
  const double lx = std::log(x);
  const double ly = std::log(y);
  const double m = std::max(theta * lx, theta * ly);
  const double log_a = m + std::log(std::exp(theta * lx - m) + std::exp(theta * ly - m));
  const double a_root = std::exp(log_a / theta);
  const double log_cu = -a_root + (1.0 / theta - 1.0) * log_a + (theta - 1.0) * lx + x;
  return std::min(1.0, std::exp(log_cu));
}

double frank_partial(double theta, double u, double v) noexcept {
  const double gu = std::expm1(-theta * u);
  const double gv = std::expm1(-theta * v);
  const double g1 = std::expm1(-theta);
  const double value = std::exp(-theta * u) * gv / (g1 + gu * gv);
  return std::clamp(value, 0.0, 1.0);
}

double raw_partial(const CopulaSpec& c, double u, double v) noexcept {
  switch (c.family()) {
    case CopulaFamily::Independence:
      return v;
    case CopulaFamily::Normal: {
      const double rho = c.param();
      const double r = std::sqrt((1.0 - rho) * (1.0 + rho));
      return normal_cdf((normal_quantile(v) - rho * normal_quantile(u)) / r);
    }
    case CopulaFamily::Clayton:
      return clayton_partial(c.param(), u, v);
    case CopulaFamily::Gumbel:
      return gumbel_partial(c.param(), u, v);
    case CopulaFamily::Frank:
      return frank_partial(c.param(), u, v);
  }
  return v;
}

void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(x));
  }
}

}  // namespace

std::string_view to_string(CopulaFamily family) noexcept {
  switch (family) {
    case CopulaFamily::Normal: return "normal";
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Frank: return "frank";
    case CopulaFamily::Independence: return "independence";
  }
  return "independence";
}

CopulaFamily parse_copula_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "normal" || lower == "gaussian") return CopulaFamily::Normal;
  if (lower == "clayton") return CopulaFamily::Clayton;
  if (lower == "gumbel") return CopulaFamily::Gumbel;
  if (lower == "frank") return CopulaFamily::Frank;
  if (lower == "independence" || lower == "indep") return CopulaFamily::Independence;
  throw ConfigError("unknown copula family '" + std::string(name) + "'");
}

CopulaSpec::CopulaSpec(CopulaFamily family, double param) : family_(family), param_(param) {
  const bool ok = [&] {
    if (!std::isfinite(param)) return family == CopulaFamily::Independence;
    switch (family) {
      case CopulaFamily::Normal: return param > -1.0 && param < 1.0;
      case CopulaFamily::Clayton: return param > 0.0;
      case CopulaFamily::Gumbel: return param >= 1.0;
      case CopulaFamily::Frank: return param != 0.0;
      case CopulaFamily::Independence: return true;
    }
    return false;
  }();
  if (!ok) {
    throw DomainError("copula parameter " + std::to_string(param) + " outside the domain of the " +
                      std::string(to_string(family)) + " family");
  }
  if (family == CopulaFamily::Independence) param_ = 0.0;
}

double cdf(const CopulaSpec& c, UnitPair p) {
  require_unit(p.u, "u");
  require_unit(p.v, "v");
  const double u = p.u;
  const double v = p.v;
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  const double theta = c.param();
  switch (c.family()) {
    case CopulaFamily::Independence:
      return u * v;
    case CopulaFamily::Normal:
      return bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), theta);
    case CopulaFamily::Clayton: {
      const double big_l = log_sum_exp_minus_one(-theta * std::log(u), -theta * std::log(v));
      return std::exp(-big_l / theta);
    }
    case CopulaFamily::Gumbel: {
      const double a = std::pow(-std::log(u), theta) + std::pow(-std::log(v), theta);
      return std::exp(-std::pow(a, 1.0 / theta));
    }
    case CopulaFamily::Frank: {
      const double ratio = std::expm1(-theta * u) * std::expm1(-theta * v) / std::expm1(-theta);
      if (ratio > -0.5) return std::clamp(-std::log1p(ratio) / theta, 0.0, std::min(u, v));
      // 1 + ratio cancels near (1,1) for large theta; rebuild it from terms of one sign.
      const double num = std::exp(-theta * u) * -std::expm1(-theta * v) +
                         std::exp(-theta) * std::expm1(theta * (1.0 - v));
      const double den = -std::expm1(-theta);
      return std::clamp(-(std::log(std::abs(num)) - std::log(std::abs(den))) / theta, 0.0, std::min(u, v));
    }
  }
  return u * v;
}

double partial_u(const CopulaSpec& c, UnitPair p) {
  if (!(p.u > 0.0 && p.u < 1.0)) {
    throw DomainError("partial_u: u must lie strictly inside (0,1), got " + std::to_string(p.u));
  }
  require_unit(p.v, "v");
  if (p.v == 0.0) return 0.0;
  if (p.v == 1.0) return 1.0;
  return raw_partial(c, clamp_unit(p.u), clamp_unit(p.v));
}

double partial_v(const CopulaSpec& c, UnitPair p) {
  if (!(p.v > 0.0 && p.v < 1.0)) {
    throw DomainError("partial_v: v must lie strictly inside (0,1), got " + std::to_string(p.v));
  }
  require_unit(p.u, "u");
  if (p.u == 0.0) return 0.0;
  if (p.u == 1.0) return 1.0;
  return raw_partial(c, clamp_unit(p.v), clamp_unit(p.u));
}

double partial_u_clamped(const CopulaSpec& c, double u, double v) noexcept {
  return raw_partial(c, clamp_unit(u), clamp_unit(v));
}

double partial_v_clamped(const CopulaSpec& c, double u, double v) noexcept {
  return raw_partial(c, clamp_unit(v), clamp_unit(u));
}

double conditional_inverse(const CopulaSpec& c, double u, double w) {
  if (!(u > 0.0 && u < 1.0) || !(w > 0.0 && w < 1.0)) {
    throw DomainError("conditional_inverse: u and w must lie in (0,1)");
  }
  const double theta = c.param();
  switch (c.family()) {
    case CopulaFamily::Independence:
      return w;
    case CopulaFamily::Normal: {
      const double r = std::sqrt((1.0 - theta) * (1.0 + theta));
      return normal_cdf(theta * normal_quantile(u) + r * normal_quantile(w));
    }
    case CopulaFamily::Clayton: {
      // log C_u = (theta+1)/theta (a - L)  =>  L - a = -theta log w / (theta+1)
      const double a = -theta * std::log(u);
      const double d = -theta * std::log(w) / (theta + 1.0);
      const double em1 = std::expm1(d);
      double b;
      if (a < 700.0) {
        b = std::log1p(std::exp(a) * em1);
      } else {
        b = a + std::log(em1) + std::log1p(std::exp(-a) / em1);
      }
      return std::exp(-b / theta);
    }
    case CopulaFamily::Frank: {
      const double g1 = std::expm1(-theta);
      const double gu = std::expm1(-theta * u);
      const double gv = w * g1 / (std::exp(-theta * u) - w * gu);
      return std::clamp(-std::log1p(gv) / theta, 0.0, 1.0);
    }
    case CopulaFamily::Gumbel: {
      const double uc = clamp_unit(u);
      double lo = 0.0;
      double hi = 1.0;
      for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double value = gumbel_partial(theta, uc, mid);
        if (std::fabs(value - w) <= 1e-10) return mid;
        if (value < w) {
          lo = mid;
        } else {
          hi = mid;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return 0.5 * (lo + hi);
      }
      throw NumericError("conditional_inverse: Gumbel bisection did not converge");
    }
  }
  return w;
}

double tau_from_param(const CopulaSpec& c) {
  const double theta = c.param();
  switch (c.family()) {
    case CopulaFamily::Independence: return 0.0;
    case CopulaFamily::Normal: return 2.0 / kPi * std::asin(theta);
    case CopulaFamily::Clayton: return theta / (2.0 + theta);
    case CopulaFamily::Gumbel: return (theta - 1.0) / theta;
    case CopulaFamily::Frank: return 1.0 - 4.0 / theta * (1.0 - debye1(theta));
  }
  return 0.0;
}

CopulaSpec param_from_tau(CopulaFamily family, double tau) {
  if (tau == 0.0 || family == CopulaFamily::Independence) {
    if (tau != 0.0) throw DomainError("independence copula requires tau = 0");
    return CopulaSpec::independence();
  }
  if (family == CopulaFamily::Normal) {
    if (!(tau > -0.95 && tau < 0.95)) {
      throw DomainError("normal copula: tau must lie in (-0.95, 0.95), got " + std::to_string(tau));
    }
    return {family, std::sin(kPi * tau / 2.0)};
  }
  if (!(tau > 0.0 && tau <= 0.95)) {
    throw DomainError(std::string(to_string(family)) + " copula: tau must lie in (0, 0.95], got " +
                      std::to_string(tau));
  }
  switch (family) {
    case CopulaFamily::Clayton: return {family, 2.0 * tau / (1.0 - tau)};
    case CopulaFamily::Gumbel: return {family, 1.0 / (1.0 - tau)};
    case CopulaFamily::Frank: {
      double lo = 1e-6;
      double hi = 100.0;
      for (int iter = 0; iter < 200 && hi - lo > 1e-13 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (tau_from_param(CopulaSpec(family, mid)) < tau) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return {family, 0.5 * (lo + hi)};
    }
    default: break;
  }
  return CopulaSpec::independence();
}

double generator(const CopulaSpec& c, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("generator: t must lie in [0,1]");
  if (t == 0.0 && c.family() != CopulaFamily::Normal) return kInf;
  const double theta = c.param();
  switch (c.family()) {
    case CopulaFamily::Independence: return -std::log(t);
    case CopulaFamily::Clayton: return std::expm1(-theta * std::log(t)) / theta;
    case CopulaFamily::Gumbel: return std::pow(-std::log(t), theta);
    case CopulaFamily::Frank: return -std::log(std::expm1(-theta * t) / std::expm1(-theta));
    case CopulaFamily::Normal: break;
  }
  throw DomainError("generator: the normal copula is not Archimedean");
}

double generator_inverse(const CopulaSpec& c, double s) {
  if (!(s >= 0.0)) throw DomainError("generator_inverse: s must be nonnegative");
  if (std::isinf(s) && c.family() != CopulaFamily::Normal) return 0.0;
  const double theta = c.param();
  switch (c.family()) {
    case CopulaFamily::Independence: return std::exp(-s);
    case CopulaFamily::Clayton: return std::exp(-std::log1p(theta * s) / theta);
    case CopulaFamily::Gumbel: return std::exp(-std::pow(s, 1.0 / theta));
    case CopulaFamily::Frank:
      return std::clamp(-std::log1p(std::exp(-s) * std::expm1(-theta)) / theta, 0.0, 1.0);
    case CopulaFamily::Normal: break;
  }
  throw DomainError("generator_inverse: the normal copula is not Archimedean");
}

}  // namespace depcen
