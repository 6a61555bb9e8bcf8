#include "depcen/cg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "depcen/error.hpp"
#include "depcen/parallel.hpp"
#include "depcen/rng.hpp"

namespace depcen {

double SurvivalCurve::at(double t) const noexcept {
  const auto it = std::upper_bound(steps.begin(), steps.end(), t,
                                   [](double x, const CurvePoint& p) { return x < p.time; });
  if (it == steps.begin()) return 1.0;
  return std::prev(it)->survival;
}

void SurvivalCurve::validate() const {
  double prev_time = -std::numeric_limits<double>::infinity();
  double prev_surv = 1.0;
  for (const auto& p : steps) {
    if (!(p.time > prev_time)) throw DomainError("survival curve: times must increase");
    if (!(p.survival >= 0.0 && p.survival <= prev_surv)) {
      throw DomainError("survival curve: survival must be nonincreasing within [0,1]");
    }
    prev_time = p.time;
    prev_surv = p.survival;
  }
}

SurvivalCurve cg_survival(std::span<const SurvivalRecord> data, const CopulaSpec& copula,
                          Target target) {
  if (copula.family() == CopulaFamily::Normal) {
    throw DomainError("cg_survival: needs an Archimedean or independence copula");
  }
  if (data.empty()) throw DomainError("cg_survival: empty data");
  const int wanted = target == Target::T ? 1 : 0;

  // Target events sort ahead of same-time non-events so the latter stay at risk.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data[a].x != data[b].x) return data[a].x < data[b].x;
    return (data[a].delta == wanted) > (data[b].delta == wanted);
  });

  const double n = static_cast<double>(data.size());
  SurvivalCurve curve;
  double total = 0.0;
  bool any_event = false;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const SurvivalRecord& r = data[order[pos]];
    if (r.delta != wanted) continue;
    any_event = true;
    const double at_risk = n - static_cast<double>(pos);
    total += generator(copula, (at_risk - 1.0) / n) - generator(copula, at_risk / n);
    const double s = generator_inverse(copula, total);
    if (!curve.steps.empty() && curve.steps.back().time == r.x) {
      curve.steps.back().survival = s;
    } else {
      curve.steps.push_back({r.x, s});
    }
  }
  if (!any_event) {
    throw DomainError(std::string("cg_survival: no events for target ") +
                      (target == Target::T ? "T" : "C"));
  }
  return curve;
}

bool FeasibleRegion::contains(std::span<const double> coords) const noexcept {
  if (coords.size() != lower.size()) return false;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < lower[i] || coords[i] > upper[i]) return false;
  }
  return true;
}

CopulaSpec cg_copula_for(CopulaFamily family, double tau, bool negative) {
  if (tau == 0.0 || family == CopulaFamily::Independence) return CopulaSpec::independence();
  if (negative) return CopulaSpec(CopulaFamily::Frank, -param_from_tau(CopulaFamily::Frank, tau).param());
  if (family == CopulaFamily::Normal) return param_from_tau(CopulaFamily::Clayton, tau);
  return param_from_tau(family, tau);
}

namespace {

std::vector<CurvePoint> fit_points(const SurvivalCurve& curve, std::size_t max_points) {
  std::vector<CurvePoint> inner;
  for (const auto& p : curve.steps) {
    if (p.survival > 0.0 && p.survival < 1.0) inner.push_back(p);
  }
  if (inner.size() <= max_points || max_points < 3) return inner;
  std::vector<CurvePoint> thinned;
  thinned.reserve(max_points);
  const double stride = static_cast<double>(inner.size() - 1) / static_cast<double>(max_points - 1);
  for (std::size_t k = 0; k < max_points; ++k) {
    thinned.push_back(inner[static_cast<std::size_t>(std::llround(stride * static_cast<double>(k)))]);
  }
  return thinned;
}

std::vector<double> fit_both(std::span<const SurvivalRecord> data, const CopulaSpec& copula,
                             MarginalFamily family_t, MarginalFamily family_c,
                             std::size_t max_points) {
  const std::size_t kt = coord_count(family_t);
  std::vector<double> coords(kt + coord_count(family_c));
  const auto curve_t = cg_survival(data, copula, Target::T);
  const auto curve_c = cg_survival(data, copula, Target::C);
  const auto pts_t = fit_points(curve_t, max_points);
  const auto pts_c = fit_points(curve_c, max_points);
  fit_to_curve(pts_t, family_t).write_coords(std::span(coords).first(kt));
  fit_to_curve(pts_c, family_c).write_coords(std::span(coords).subspan(kt));
  return coords;
}

// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

bool coordinate_is_positive(MarginalFamily family, std::size_t k) {
  return !(family == MarginalFamily::LogNormal && k == 0);
}

}  // namespace

FeasibleRegion region_from_estimates(std::span<const std::vector<double>> per_tau,
                                     MarginalFamily family_t, MarginalFamily family_c) {
  const std::size_t kt = coord_count(family_t);
  const std::size_t dim = kt + coord_count(family_c);
  if (per_tau.empty()) throw DomainError("feasible region: no preliminary estimates");
  FeasibleRegion region;
  region.family_t = family_t;
  region.family_c = family_c;
  region.lower.resize(dim);
  region.upper.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> values;
    for (const auto& est : per_tau) {
      if (est.size() != dim) throw DomainError("feasible region: coordinate count mismatch");
      values.push_back(est[j]);
    }
    const double q1 = quantile(values, 0.25);
    const double q3 = quantile(values, 0.75);
    double lo = q1 - 1.5 * (q3 - q1);
    double hi = q3 + 1.5 * (q3 - q1);
    if (!(hi > lo)) {
      const double mid = 0.5 * (q1 + q3);
      const double pad = mid != 0.0 ? 0.1 * std::abs(mid) : 0.1;
      lo = mid - pad;
      hi = mid + pad;
    }
    const bool positive = j < kt ? coordinate_is_positive(family_t, j)
                                 : coordinate_is_positive(family_c, j - kt);
    if (positive) {
      lo = std::max(lo, 1e-6);
      if (!(hi > lo)) hi = lo * 1.1;
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw NumericError("feasible region: non-finite bound");
    }
    region.lower[j] = lo;
    region.upper[j] = hi;
  }
  return region;
}

FeasibleRegion feasible_region(std::span<const SurvivalRecord> data, CopulaFamily copula_family,
                               MarginalFamily family_t, MarginalFamily family_c,
                               const RegionOptions& options) {
  if (options.representative_taus.empty()) {
    throw ConfigError("feasible region: at least one representative tau is required");
  }
  const std::size_t taus = options.representative_taus.size();
  const std::size_t reps = std::max<std::size_t>(options.fits_per_tau, 1);
  const std::size_t dim = coord_count(family_t) + coord_count(family_c);

  // Row order must not matter, so resampling indexes a sorted copy.
  std::vector<SurvivalRecord> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end(), [](const SurvivalRecord& a, const SurvivalRecord& b) {
    return a.x != b.x ? a.x < b.x : a.delta < b.delta;
  });

  std::vector<CopulaSpec> copulas;
  for (double tau : options.representative_taus) copulas.push_back(cg_copula_for(copula_family, tau, options.negative_dependence));

  std::vector<std::optional<std::vector<double>>> fits(taus * reps);
  std::vector<std::string> failures(taus * reps);
  const Rng master(options.seed);
  parallel_for(taus * reps, options.threads, [&](std::size_t task) {
    const std::size_t t = task / reps;
    const std::size_t r = task % reps;
    try {
      if (options.fits_per_tau == 0) {
        fits[task] = fit_both(sorted, copulas[t], family_t, family_c, options.max_fit_points);
        return;
      }
      // Replicate r shares its resample across the representative taus.
      Rng rng = master.split(r);
      std::vector<SurvivalRecord> sample(sorted.size());
      for (auto& rec : sample) rec = sorted[rng.index(sorted.size())];
      fits[task] = fit_both(sample, copulas[t], family_t, family_c, options.max_fit_points);
    } catch (const Error& e) {
      failures[task] = e.what();
    }
  });

  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> sds;
  for (std::size_t t = 0; t < taus; ++t) {
    std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
    std::size_t ok = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& fit = fits[t * reps + r];
      if (!fit) continue;
      for (std::size_t j = 0; j < dim; ++j) sum[j] += (*fit)[j];
      ++ok;
    }
    if (ok == 0) {
      throw FitError("feasible region: every fit failed at tau " +
                     std::to_string(options.representative_taus[t]) + ": " + failures[t * reps]);
    }
    for (auto& s : sum) s /= static_cast<double>(ok);
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& fit = fits[t * reps + r];
      if (!fit) continue;
      for (std::size_t j = 0; j < dim; ++j) sq[j] += ((*fit)[j] - sum[j]) * ((*fit)[j] - sum[j]);
    }
    for (auto& v : sq) v = ok > 1 ? std::sqrt(v / static_cast<double>(ok - 1)) : 0.0;
    means.push_back(std::move(sum));
    sds.push_back(std::move(sq));
  }
  FeasibleRegion region = region_from_estimates(means, family_t, family_c);

  // The four tau means can nearly coincide (when the curves end early the
  // CG correction is small), leaving a box narrower than the noise of one fit.
  if (options.spread_sds > 0.0) {
    const std::size_t kt = coord_count(family_t);
    for (std::size_t j = 0; j < dim; ++j) {
      for (std::size_t t = 0; t < taus; ++t) {
        region.lower[j] = std::min(region.lower[j], means[t][j] - options.spread_sds * sds[t][j]);
        region.upper[j] = std::max(region.upper[j], means[t][j] + options.spread_sds * sds[t][j]);
      }
      const bool positive = j < kt ? coordinate_is_positive(family_t, j)
                                   : coordinate_is_positive(family_c, j - kt);
      if (positive) region.lower[j] = std::max(region.lower[j], 1e-6);
    }
  }
  return region;
}

}  // namespace depcen
