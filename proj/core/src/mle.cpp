#include "depcen/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "depcen/error.hpp"

namespace depcen {

namespace {

constexpr double kLogFloor = -690.7755278982137;  // log(1e-300)
constexpr double kInf = std::numeric_limits<double>::infinity();

double floored(double log_value) noexcept {
  return std::isnan(log_value) ? kLogFloor : std::max(log_value, kLogFloor);
}

}  // namespace

double composite_log_likelihood(const ThetaVector& theta, CopulaFamily family,
                                std::span<const SurvivalRecord> data, bool rotated) {
  const CopulaSpec copula = copula_at(family, theta.tau);
  double total = 0.0;
  for (const auto& r : data) {
    const double st = survival(theta.t, r.x);
    const double sc = survival(theta.c, r.x);
    if (r.delta == 1) {
      const double cu = rotated ? 1.0 - partial_u_clamped(copula, st, 1.0 - sc)
                                : partial_u_clamped(copula, st, sc);
      total += floored(std::log(cu) + log_pdf(theta.t, r.x));
    } else {
      const double cv = rotated ? partial_v_clamped(copula, st, 1.0 - sc)
                                : partial_v_clamped(copula, st, sc);
      total += floored(std::log(cv) + log_pdf(theta.c, r.x));
    }
  }
  if (!std::isfinite(total)) throw NumericError("composite log-likelihood is not finite");
  return total;
}

namespace {

// Unconstrained working coordinates: logs of positive quantities.
std::vector<double> to_working(const MarginalSpec& m) {
  switch (m.family()) {
    case MarginalFamily::Exponential: return {std::log(m.scale())};
    case MarginalFamily::Weibull: return {std::log(m.shape()), std::log(m.scale())};
    case MarginalFamily::LogNormal: return {m.mu(), std::log(m.sigma())};
  }
  return {};
}

MarginalSpec from_working(MarginalFamily family, std::span<const double> w) {
  switch (family) {
    case MarginalFamily::Exponential: return MarginalSpec::exponential(std::exp(w[0]));
    case MarginalFamily::Weibull: return MarginalSpec::weibull(std::exp(w[0]), std::exp(w[1]));
    case MarginalFamily::LogNormal: return MarginalSpec::lognormal(w[0], std::exp(w[1]));
  }
  return {};
}

}  // namespace

MarginalSpec independent_fit(std::span<const SurvivalRecord> data, MarginalFamily family,
                             Target target) {
  const int wanted = target == Target::T ? 1 : 0;
  double events = 0.0;
  double total_time = 0.0;
  double log_sum = 0.0;
  double log_sq = 0.0;
  for (const auto& r : data) {
    total_time += r.x;
    const double y = std::log(r.x);
    log_sum += y;
    log_sq += y * y;
    if (r.delta == wanted) events += 1.0;
  }
  if (data.empty() || !(total_time > 0.0)) throw FitError("independent fit: empty data");
  // With no target events the likelihood has no interior maximum; half an
  // event keeps the start finite.
  const double rate = std::max(events, 0.5) / total_time;
  if (family == MarginalFamily::Exponential) return MarginalSpec::exponential(rate);

  const double n = static_cast<double>(data.size());
  const double mean_log = log_sum / n;
  const double sd_log = std::sqrt(std::max(log_sq / n - mean_log * mean_log, 1e-4));
  const MarginalSpec start = family == MarginalFamily::Weibull
                                 ? MarginalSpec::weibull(1.0, rate)
                                 : MarginalSpec::lognormal(mean_log, sd_log);
  if (events < 1.0) return start;

  auto negll = [&](std::span<const double> w) {
    MarginalSpec m;
    try {
      m = from_working(family, w);
    } catch (const Error&) {
      return kInf;
    }
    double ll = 0.0;
    for (const auto& r : data) {
      ll += r.delta == wanted ? floored(log_pdf(m, r.x)) : floored(log_survival(m, r.x));
    }
    return std::isfinite(ll) ? -ll : kInf;
  };
  NelderMeadOptions nm;
  nm.max_evaluations = 2000;
  nm.f_tolerance = 1e-12;
  nm.initial_step = 0.3;
  OptimResult r = nelder_mead(negll, to_working(start), nm);
  r = nelder_mead(negll, r.x, nm);
  return from_working(family, r.x);
}

MleFit mle_fit(std::span<const SurvivalRecord> data, CopulaFamily family, MarginalFamily family_t,
               MarginalFamily family_c, const MleOptions& options) {
  if (data.empty()) throw FitError("mle_fit: empty data");
  const ModelSpec model{family, family_t, family_c, false};
  ThetaVector start;
  if (options.start) {
    start = *options.start;
  } else {
    start.t = independent_fit(data, family_t, Target::T);
    start.c = independent_fit(data, family_c, Target::C);
    start.tau = family == CopulaFamily::Independence ? 0.0 : 0.4;
  }
  if (start.t.family() != family_t || start.c.family() != family_c) {
    throw ConfigError("mle_fit: start does not match the marginal families");
  }

  Box box;
  if (options.bounds) {
    box = *options.bounds;
    if (box.size() != model.dimension()) throw ConfigError("mle_fit: bounds have wrong dimension");
  } else {
    auto widen = [&box](const MarginalSpec& m) {
      std::vector<double> c(coord_count(m.family()));
      m.write_coords(c);
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (m.family() == MarginalFamily::LogNormal && k == 0) {
          box.lower.push_back(c[k] - 4.0 * m.sigma());
          box.upper.push_back(c[k] + 4.0 * m.sigma());
        } else {
          const double spread = m.family() == MarginalFamily::LogNormal ? 8.0 : 4.0;  // sigma^2
          box.lower.push_back(c[k] * std::exp(-spread));
          box.upper.push_back(c[k] * std::exp(spread));
        }
      }
    };
    widen(start.t);
    widen(start.c);
    const bool normal = family == CopulaFamily::Normal;
    box.lower.push_back(family == CopulaFamily::Independence ? 0.0 : (normal ? -0.95 : 0.0));
    box.upper.push_back(family == CopulaFamily::Independence ? 0.0 : 0.95);
  }
  box.validate();

  // Optimize on the working scale (logs of positive coordinates, tau as is).
  const std::size_t kt = coord_count(family_t);
  const std::size_t kc = coord_count(family_c);
  auto positive = [&](std::size_t j) {
    if (j == kt + kc) return false;
    if (j < kt) return !(family_t == MarginalFamily::LogNormal && j == 0);
    return !(family_c == MarginalFamily::LogNormal && j == kt);
  };
  Box work = box;
  for (std::size_t j = 0; j < box.size(); ++j) {
    if (positive(j)) {
      work.lower[j] = std::log(std::max(box.lower[j], 1e-300));
      work.upper[j] = std::log(box.upper[j]);
    }
  }
  auto natural = [&](std::span<const double> w) {
    std::vector<double> x(w.begin(), w.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (positive(j)) x[j] = std::exp(x[j]);
    }
    return x;
  };
  auto negll = [&](std::span<const double> w) {
    try {
      return -composite_log_likelihood(theta_from_coords(model, natural(w)), family, data);
    } catch (const Error&) {
      return kInf;
    }
  };
  std::vector<double> w0 = to_coords(start);
  for (std::size_t j = 0; j < w0.size(); ++j) {
    if (positive(j)) w0[j] = std::log(w0[j]);
  }
  work.project(w0);

  const OptimResult r = minimize_box(negll, w0, work, options.optimizer);
  MleFit fit;
  fit.theta_hat = theta_from_coords(model, natural(r.x));
  fit.log_likelihood = -r.value;
  fit.converged = r.converged && std::isfinite(r.value);
  fit.iterations = r.iterations;
  return fit;
}

}  // namespace depcen
