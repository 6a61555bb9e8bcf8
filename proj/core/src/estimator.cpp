#include "depcen/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "depcen/error.hpp"
#include "depcen/parallel.hpp"
#include "depcen/rng.hpp"

namespace depcen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Seed streams off the master seed.
enum Stream : std::uint64_t { kRegion = 1, kWeights = 2, kBagging = 3, kCrn = 4 };

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
  return Rng(seed).split(stream).key();
}

ObjectiveFn make_objective(const ModelSpec& model, const MomentVector& target,
                           const WeightMatrix& weights, const MomentEngine& engine) {
  return [&model, target, weights, &engine](std::span<const double> x) {
    return objective(model, theta_from_coords(model, x), target, weights, engine);
  };
}

Box combined_box(const FeasibleRegion& region, const Box& tau) {
  Box box;
  box.lower = region.lower;
  box.upper = region.upper;
  box.lower.push_back(tau.lower[0]);
  box.upper.push_back(tau.upper[0]);
  return box;
}

}  // namespace

std::string_view to_string(RangeLabel label) noexcept {
  switch (label) {
    case RangeLabel::None: return "None";
    case RangeLabel::Low: return "Low";
    case RangeLabel::Moderate: return "Moderate";
    case RangeLabel::High: return "High";
  }
  return "?";
}

const std::array<TauRange, 4>& canonical_ranges() noexcept {
  static const std::array<TauRange, 4> ranges{{
      {-0.1, 0.15, RangeLabel::None},
      {0.15, 0.4, RangeLabel::Low},
      {0.4, 0.65, RangeLabel::Moderate},
      {0.65, 0.9, RangeLabel::High},
  }};
  return ranges;
}

Box tau_search_interval(const TauRange& range, CopulaFamily family) {
  // The open lower end is approximated by a small inward step.
  if (family == CopulaFamily::Independence) return Box{{0.0}, {0.0}};
  double lo = range.lo + 1e-9;
  if (family != CopulaFamily::Normal) lo = std::max(lo, 0.0);
  return Box{{lo}, {range.hi}};
}

std::size_t VoteTally::winner() const {
  std::size_t best = 0;
  for (std::size_t r = 1; r < ranges.size(); ++r) {
    const auto& a = ranges[r];
    const auto& b = ranges[best];
    if (a.votes > b.votes || (a.votes == b.votes && a.mean_q < b.mean_q)) best = r;
  }
  return best;
}

MomentEngine make_engine(const ModelSpec& model, const EstimatorOptions& options, bool final_stage) {
  const MomentEngine closed = MomentEngine::closed_form();
  const EngineKind kind = options.engine.value_or(
      closed.supports(model) ? EngineKind::ClosedForm : EngineKind::Quadrature);
  switch (kind) {
    case EngineKind::ClosedForm:
      if (!closed.supports(model)) {
        throw ConfigError("the closed-form engine needs log-normal marginals and a Normal copula");
      }
      return closed;
    case EngineKind::Quadrature:
      return MomentEngine::quadrature(final_stage ? options.final_quadrature
                                                  : options.search_quadrature);
    case EngineKind::MonteCarlo:
      return MomentEngine::monte_carlo(final_stage ? options.mc_draws_final : options.mc_draws_search,
                                       derive(options.seed, kCrn));
  }
  return closed;
}

VoteTally global_stage(std::span<const SurvivalRecord> data, const ModelSpec& model,
                       const FeasibleRegion& region, const EstimatorOptions& options) {
  const std::size_t bags = options.bag_replicates;
  if (bags < 1) throw ConfigError("global stage: at least one bagging replicate is required");
  const int budget = options.budget > 0
                         ? options.budget
                         : (options.engine == EngineKind::MonteCarlo ? 1500 : 3000);
  const MomentEngine engine = make_engine(model, options, false);
  const auto& ranges = canonical_ranges();
  std::array<Box, 4> boxes;
  for (std::size_t r = 0; r < 4; ++r) {
    boxes[r] = combined_box(region, tau_search_interval(ranges[r], model.copula));
  }

  const auto sorted = canonical_order(data);
  const Rng master(derive(options.seed, kBagging));

  struct Replicate {
    bool ok = false;
    MomentVector target;
    WeightMatrix weights;
  };
  std::vector<Replicate> reps(bags);
  parallel_for(bags, options.threads, [&](std::size_t b) {
    Rng rng = master.split(2 * b);
    const auto sample = resample(sorted, rng);
    try {
      reps[b].target = sample_moments(sample);
      reps[b].weights =
          weight_matrix(sample, options.inner_weight_replicates, master.split(2 * b + 1).key(), 1);
      reps[b].ok = true;
    } catch (const MomentUndefinedError&) {
    } catch (const EstimationError&) {
    }
  });

  std::vector<OptimResult> results(bags * 4);
  parallel_for(bags * 4, options.threads, [&](std::size_t task) {
    const std::size_t b = task / 4;
    const std::size_t r = task % 4;
    if (!reps[b].ok) return;
    const ObjectiveFn f = make_objective(model, reps[b].target, reps[b].weights, engine);
    const std::uint64_t seed = master.split(1000003 + task).key();
    results[task] = anneal(f, boxes[r], budget, seed, options.anneal);
  });

  VoteTally tally;
  std::array<double, 4> q_sum{};
  std::array<std::size_t, 4> q_count{};
  for (std::size_t b = 0; b < bags; ++b) {
    if (!reps[b].ok) {
      ++tally.skipped;
      continue;
    }
    std::size_t vote = 4;
    double lowest = kInf;
    for (std::size_t r = 0; r < 4; ++r) {
      const OptimResult& res = results[b * 4 + r];
      if (!std::isfinite(res.value)) continue;
      auto& rt = tally.ranges[r];
      q_sum[r] += res.value;
      ++q_count[r];
      rt.candidates.push_back(res.x);
      if (res.value < rt.best_q) {
        rt.best_q = res.value;
        rt.best_coords = res.x;
      }
      if (res.value < lowest) {
        lowest = res.value;
        vote = r;
      }
    }
    if (vote == 4) {
      ++tally.skipped;
      continue;
    }
    ++tally.ranges[vote].votes;
    ++tally.replicates;
  }
  for (std::size_t r = 0; r < 4; ++r) {
    if (q_count[r] > 0) tally.ranges[r].mean_q = q_sum[r] / static_cast<double>(q_count[r]);
  }
  if (2 * tally.skipped > bags || tally.replicates == 0) {
    throw EstimationError("global stage: " + std::to_string(tally.skipped) + " of " +
                          std::to_string(bags) + " bootstrap replicates were unusable");
  }
  return tally;
}

LocalResult local_stage(const ModelSpec& model, std::span<const double> start, const Box& box,
                        const MomentVector& target, const WeightMatrix& weights,
                        const MomentEngine& engine, const BoxMinimizeOptions& options) {
  const ObjectiveFn raw = make_objective(model, target, weights, engine);
  const ObjectiveFn f = [&raw](std::span<const double> x) {
    try {
      return raw(x);
    } catch (const Error&) {
      return kInf;
    }
  };
  std::vector<double> x0(start.begin(), start.end());
  box.project(x0);
  LocalResult out;
  out.q_start = f(x0);
  if (!std::isfinite(out.q_start)) {
    throw EstimationError("local stage: objective is not finite at the starting point");
  }
  OptimResult r;
  if (engine.kind() == EngineKind::MonteCarlo) {
    NelderMeadOptions nm;
    nm.max_evaluations = options.max_iterations * static_cast<int>(model.dimension() + 1);
    nm.f_tolerance = options.f_tolerance;
    nm.initial_step = 0.02;
    r = nelder_mead(f, x0, nm, &box);
  } else {
    r = minimize_box(f, x0, box, options);
  }
  std::vector<double> x = r.value <= out.q_start ? r.x : x0;
  box.project(x);
  out.theta = theta_from_coords(model, x);
  out.q_final = std::min(r.value, out.q_start);
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

EstimateReport estimate(std::span<const SurvivalRecord> data, CopulaFamily copula,
                        MarginalFamily family_t, MarginalFamily family_c,
                        const EstimatorOptions& options) {
  if (options.negative_dependence && copula == CopulaFamily::Independence) {
    throw ConfigError("negative dependence needs a copula family other than independence");
  }
  EstimateReport report;
  report.seed = options.seed;
  report.model = ModelSpec{copula, family_t, family_c, options.negative_dependence};
  const ModelSpec& model = report.model;

  const auto sorted = canonical_order(data);
  report.sample = sample_moments(sorted);

  if (options.region_override) {
    report.region = *options.region_override;
    if (report.region.family_t != family_t || report.region.family_c != family_c) {
      throw ConfigError("supplied feasible region was built for other marginal families");
    }
  } else {
    RegionOptions region_options = options.region;
    region_options.seed = derive(options.seed, kRegion);
    region_options.threads = options.threads;
    region_options.negative_dependence = options.negative_dependence;
    report.region = feasible_region(sorted, copula, family_t, family_c, region_options);
  }

  report.weights = weight_matrix(sorted, options.weight_replicates, derive(options.seed, kWeights),
                                 options.threads);
  report.tally = global_stage(sorted, model, report.region, options);

  const std::size_t win = report.tally.winner();
  const TauRange range = canonical_ranges()[win];
  const Box box = combined_box(report.region, tau_search_interval(range, copula));
  const MomentEngine engine = make_engine(model, options, true);
  report.engine = engine.kind();

  // Start from the replicate minimizer that fits the data itself best.
  const auto& candidates = report.tally.ranges[win].candidates;
  std::vector<double> start = report.tally.ranges[win].best_coords;
  double start_q = kInf;
  for (const auto& cand : candidates) {
    double q;
    try {
      q = objective(model, theta_from_coords(model, cand), report.sample, report.weights, engine);
    } catch (const Error&) {
      continue;
    }
    if (q < start_q) {
      start_q = q;
      start = cand;
    }
  }
  if (start.empty()) throw EstimationError("global stage produced no usable starting point");

  const LocalResult local =
      local_stage(model, start, box, report.sample, report.weights, engine, options.local);
  report.theta_hat = local.theta;
  report.q_start = local.q_start;
  report.q_final = local.q_final;
  report.local_iterations = local.iterations;
  report.converged = local.converged;
  report.voted_range = range;
  if (options.negative_dependence) {
    report.theta_hat.tau = -report.theta_hat.tau;
    report.voted_range = TauRange{-range.hi, -range.lo, range.label};
  }
  return report;
}

}  // namespace depcen
