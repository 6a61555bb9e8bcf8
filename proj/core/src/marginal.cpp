#include "depcen/marginal.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "depcen/error.hpp"
#include "depcen/optimize.hpp"
#include "depcen/special.hpp"

namespace depcen {

std::string_view to_string(MarginalFamily family) noexcept {
  switch (family) {
    case MarginalFamily::Exponential: return "exponential";
    case MarginalFamily::Weibull: return "weibull";
    case MarginalFamily::LogNormal: return "lognormal";
  }
  return "exponential";
}

MarginalFamily parse_marginal_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "exp" || lower == "exponential") return MarginalFamily::Exponential;
  if (lower == "weibull") return MarginalFamily::Weibull;
  if (lower == "lognormal" || lower == "log-normal" || lower == "lnorm") {
    return MarginalFamily::LogNormal;
  }
  throw ConfigError("unknown marginal family '" + std::string(name) + "'");
}

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(what) + " must be positive and finite, got " + std::to_string(x));
  }
}

void require_time(double t) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative, got " + std::to_string(t));
}

// Cumulative hazard for Exponential / Weibull.
double cum_hazard(const MarginalSpec& m, double t) {
  return m.scale() * std::pow(t, m.shape());
}

}  // namespace

MarginalSpec MarginalSpec::exponential(double rate) {
  require_positive(rate, "exponential rate");
  return {MarginalFamily::Exponential, rate, 1.0};
}

MarginalSpec MarginalSpec::weibull(double shape, double scale) {
  require_positive(shape, "weibull shape");
  require_positive(scale, "weibull scale");
  return {MarginalFamily::Weibull, scale, shape};
}

MarginalSpec MarginalSpec::lognormal(double mu, double sigma) {
  if (!std::isfinite(mu)) throw DomainError("lognormal mu must be finite");
  require_positive(sigma, "lognormal sigma");
  return {MarginalFamily::LogNormal, mu, sigma};
}

MarginalSpec MarginalSpec::from_coords(MarginalFamily family, std::span<const double> coords) {
  if (coords.size() != coord_count(family)) {
    throw ConfigError("marginal coordinates: expected " + std::to_string(coord_count(family)) +
                      " values for " + std::string(to_string(family)));
  }
  switch (family) {
    case MarginalFamily::Exponential: return exponential(coords[0]);
    case MarginalFamily::Weibull: return weibull(coords[0], coords[1]);
    case MarginalFamily::LogNormal: {
      require_positive(coords[1], "lognormal sigma^2");
      return lognormal(coords[0], std::sqrt(coords[1]));
    }
  }
  return {};
}

void MarginalSpec::write_coords(std::span<double> out) const {
  switch (family_) {
    case MarginalFamily::Exponential:
      out[0] = a_;
      break;
    case MarginalFamily::Weibull:
      out[0] = b_;
      out[1] = a_;
      break;
    case MarginalFamily::LogNormal:
      out[0] = a_;
      out[1] = b_ * b_;
      break;
  }
}

std::string MarginalSpec::describe() const {
  // Shortest text that parses back to the same double.
  auto text = [](double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  };
  switch (family_) {
    case MarginalFamily::Exponential: return "exp:" + text(a_);
    case MarginalFamily::Weibull: return "weibull:" + text(b_) + ',' + text(a_);
    case MarginalFamily::LogNormal: return "lognormal:" + text(a_) + ',' + text(b_);
  }
  return {};
}

MarginalSpec parse_marginal_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("marginal '" + std::string(text) + "': expected family:param[,param]");
  }
  const MarginalFamily family = parse_marginal_family(text.substr(0, colon));
  std::vector<double> values;
  std::string_view rest = text.substr(colon + 1);
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || item.empty()) {
      throw ConfigError("marginal '" + std::string(text) + "': cannot parse '" + std::string(item) + "'");
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (values.size() != coord_count(family)) {
    throw ConfigError("marginal '" + std::string(text) + "': " + std::string(to_string(family)) +
                      " takes " + std::to_string(coord_count(family)) + " parameter(s)");
  }
  try {
    switch (family) {
      case MarginalFamily::Exponential: return MarginalSpec::exponential(values[0]);
      case MarginalFamily::Weibull: return MarginalSpec::weibull(values[0], values[1]);
      case MarginalFamily::LogNormal: return MarginalSpec::lognormal(values[0], values[1]);
    }
  } catch (const DomainError& e) {
    throw ConfigError("marginal '" + std::string(text) + "': " + e.what());
  }
  return {};
}

double survival(const MarginalSpec& m, double t) {
  require_time(t);
  if (m.family() == MarginalFamily::LogNormal) {
    if (t == 0.0) return 1.0;
    return normal_cdf(-(std::log(t) - m.mu()) / m.sigma());
  }
  return std::exp(-cum_hazard(m, t));
}

double cdf(const MarginalSpec& m, double t) {
  require_time(t);
  if (m.family() == MarginalFamily::LogNormal) {
    if (t == 0.0) return 0.0;
    return normal_cdf((std::log(t) - m.mu()) / m.sigma());
  }
  return -std::expm1(-cum_hazard(m, t));
}

double log_pdf(const MarginalSpec& m, double t) {
  require_time(t);
  switch (m.family()) {
    case MarginalFamily::Exponential:
      return std::log(m.scale()) - m.scale() * t;
    case MarginalFamily::Weibull: {
      if (t == 0.0) {
        if (m.shape() < 1.0) return std::numeric_limits<double>::infinity();
        if (m.shape() > 1.0) return -std::numeric_limits<double>::infinity();
        return std::log(m.scale());
      }
      const double lt = std::log(t);
      return std::log(m.shape()) + std::log(m.scale()) + (m.shape() - 1.0) * lt -
             m.scale() * std::exp(m.shape() * lt);
    }
    case MarginalFamily::LogNormal: {
      if (t == 0.0) return -std::numeric_limits<double>::infinity();
      const double lt = std::log(t);
      const double z = (lt - m.mu()) / m.sigma();
      return -0.5 * z * z - std::log(m.sigma()) - lt - 0.91893853320467274178;
    }
  }
  return 0.0;
}

double pdf(const MarginalSpec& m, double t) { return std::exp(log_pdf(m, t)); }

double log_survival(const MarginalSpec& m, double t) {
  require_time(t);
  if (m.family() == MarginalFamily::LogNormal) {
    if (t == 0.0) return 0.0;
    const double z = (std::log(t) - m.mu()) / m.sigma();
    if (z < 5.0) return std::log(normal_cdf(-z));
    // Mills-ratio tail via erfc is still accurate here; log of a tiny value.
    return std::log(0.5 * std::erfc(z / 1.41421356237309504880));
  }
  return -cum_hazard(m, t);
}

double hazard(const MarginalSpec& m, double t) {
  require_time(t);
  switch (m.family()) {
    case MarginalFamily::Exponential:
      return m.scale();
    case MarginalFamily::Weibull:
      return m.shape() * m.scale() * std::pow(t, m.shape() - 1.0);
    case MarginalFamily::LogNormal:
      return std::exp(log_pdf(m, t) - log_survival(m, t));
  }
  return 0.0;
}

double inverse_survival(const MarginalSpec& m, double u) {
  if (!(u > 0.0 && u <= 1.0)) {
    throw DomainError("inverse_survival: u must lie in (0,1], got " + std::to_string(u));
  }
  if (u == 1.0) return 0.0;
  switch (m.family()) {
    case MarginalFamily::Exponential:
      return -std::log(u) / m.scale();
    case MarginalFamily::Weibull:
      return std::pow(-std::log(u) / m.scale(), 1.0 / m.shape());
    case MarginalFamily::LogNormal:
      return std::exp(m.mu() - m.sigma() * normal_quantile(u));
  }
  return 0.0;
}

double survival_at_log_time(const MarginalSpec& m, double y) noexcept {
  switch (m.family()) {
    case MarginalFamily::Exponential:
      return std::exp(-m.scale() * std::exp(y));
    case MarginalFamily::Weibull:
      return std::exp(-m.scale() * std::exp(m.shape() * y));
    case MarginalFamily::LogNormal:
      return normal_cdf(-(y - m.mu()) / m.sigma());
  }
  return 0.0;
}

double survival_normal_score(const MarginalSpec& m, double y) {
  constexpr double kTiny = 1e-300;
  switch (m.family()) {
    case MarginalFamily::LogNormal:
      return -(y - m.mu()) / m.sigma();
    case MarginalFamily::Exponential:
    case MarginalFamily::Weibull: {
      const double h = m.scale() * std::exp(m.shape() * y);
      if (h > std::log(2.0)) {
        return normal_quantile(std::max(std::exp(-h), kTiny));
      }
      const double f = -std::expm1(-h);
      return -normal_quantile(std::max(f, kTiny));
    }
  }
  return 0.0;
}

namespace {

// Fit parameters live on an unconstrained scale: logs of positive quantities.
MarginalSpec from_fit_params(MarginalFamily family, std::span<const double> p) {
  switch (family) {
    case MarginalFamily::Exponential: return MarginalSpec::exponential(std::exp(p[0]));
    case MarginalFamily::Weibull: return MarginalSpec::weibull(std::exp(p[0]), std::exp(p[1]));
    case MarginalFamily::LogNormal: return MarginalSpec::lognormal(p[0], std::exp(p[1]));
  }
  return {};
}

std::vector<double> to_fit_params(const MarginalSpec& m) {
  switch (m.family()) {
    case MarginalFamily::Exponential: return {std::log(m.scale())};
    case MarginalFamily::Weibull: return {std::log(m.shape()), std::log(m.scale())};
    case MarginalFamily::LogNormal: return {m.mu(), std::log(m.sigma())};
  }
  return {};
}

// Linearized start: log(-log S) is linear in log t for Weibull, and
// Phi^{-1}(1 - S) is linear in log t for the log-normal.
MarginalSpec linearized_start(std::span<const CurvePoint> points, MarginalFamily family) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(points.size());
  for (const auto& pt : points) {
    const double x = std::log(pt.time);
    const double y = family == MarginalFamily::LogNormal ? normal_quantile(1.0 - pt.survival)
                                                         : std::log(-std::log(pt.survival));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  double slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 1.0;
  if (!(slope > 1e-3) || !std::isfinite(slope)) slope = 1.0;
  const double intercept = (sy - slope * sx) / n;
  switch (family) {
    case MarginalFamily::Exponential: {
      // log(-log S) = log(lambda) + log t with unit slope.
      return MarginalSpec::exponential(std::exp((sy - sx) / n));
    }
    case MarginalFamily::Weibull:
      return MarginalSpec::weibull(slope, std::exp(intercept));
    case MarginalFamily::LogNormal:
      // z = (log t - mu) / sigma
      return MarginalSpec::lognormal(-intercept / slope, 1.0 / slope);
  }
  return {};
}

}  // namespace

MarginalSpec fit_to_curve(std::span<const CurvePoint> points, MarginalFamily family) {
  if (points.size() < 3) throw FitError("fit_to_curve: at least three points are required");
  std::vector<double> levels;
  levels.reserve(points.size());
  for (const auto& pt : points) {
    if (!(pt.time > 0.0) || !std::isfinite(pt.time)) {
      throw FitError("fit_to_curve: times must be positive and finite");
    }
    if (!(pt.survival > 0.0 && pt.survival < 1.0)) {
      throw FitError("fit_to_curve: survival values must lie in (0,1)");
    }
    levels.push_back(pt.survival);
  }
  std::sort(levels.begin(), levels.end());
  const auto distinct = std::unique(levels.begin(), levels.end()) - levels.begin();
  if (distinct < 3) throw FitError("fit_to_curve: degenerate curve (fewer than three levels)");

  auto sse = [&](std::span<const double> p) {
    MarginalSpec m;
    try {
      m = from_fit_params(family, p);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
    double total = 0.0;
    for (const auto& pt : points) {
      const double r = survival(m, pt.time) - pt.survival;
      total += r * r;
    }
    return total;
  };

  const MarginalSpec default_start = family == MarginalFamily::LogNormal
                                         ? MarginalSpec::lognormal(0.0, 1.0)
                                         : (family == MarginalFamily::Weibull
                                                ? MarginalSpec::weibull(1.0, 1.0)
                                                : MarginalSpec::exponential(1.0));
  std::vector<MarginalSpec> starts{default_start};
  try {
    starts.push_back(linearized_start(points, family));
  } catch (const Error&) {
  }

  NelderMeadOptions options;
  options.max_evaluations = 3000;
  options.f_tolerance = 1e-20;
  options.x_tolerance = 1e-11;
  options.initial_step = 0.5;

  OptimResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    OptimResult r = nelder_mead(sse, to_fit_params(start), options);
    // Restarting from the optimum guards against a collapsed simplex.
    for (int restart = 0; restart < 3; ++restart) {
      NelderMeadOptions again = options;
      again.initial_step = 0.05;
      OptimResult r2 = nelder_mead(sse, r.x, again);
      const bool improved = r2.value < r.value - 1e-18;
      if (r2.value <= r.value) r = r2;
      if (!improved) break;
    }
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value)) throw FitError("fit_to_curve: objective not finite");
  return from_fit_params(family, best.x);
}

}  // namespace depcen
