#include "depcen/anneal.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "depcen/error.hpp"
#include "depcen/rng.hpp"
#include "depcen/special.hpp"

namespace depcen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailLimit = 1e8;

// Draws from the Tsallis visiting distribution at a given temperature.
class Visitor {
 public:
  explicit Visitor(double qv) : qv_(qv) {
    if (!(qv > 1.0 && qv < 3.0)) throw ConfigError("anneal: visiting parameter must lie in (1,3)");
    factor2_ = std::exp((4.0 - qv) * std::log(qv - 1.0));
    factor3_ = std::exp((2.0 - qv) * std::log(2.0) / (qv - 1.0));
    factor5_ = 1.0 / (qv - 1.0) - 0.5;
    const double d1 = 2.0 - factor5_;
    factor6_ = kPi * (1.0 - factor5_) / std::sin(kPi * (1.0 - factor5_)) / std::exp(std::lgamma(d1));
  }

  double draw(double temperature, Rng& rng) const {
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = std::sqrt(kPi) * factor1 * factor2_ / (factor3_ * (3.0 - qv_));
    const double sigma = std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    const double x = sigma * rng.normal();
    const double y = std::abs(rng.normal());
    const double den = std::exp((qv_ - 1.0) * std::log(y) / (3.0 - qv_));
    double step = x / den;
    if (!std::isfinite(step) || std::abs(step) > kTailLimit) {
      step = std::copysign(kTailLimit, step) * rng.uniform();
    }
    return step;
  }

 private:
  double qv_;
  double factor2_ = 0.0;
  double factor3_ = 0.0;
  double factor5_ = 0.0;
  double factor6_ = 0.0;
};

// Folds x back into [lo, hi] by repeated reflection at the walls.
double reflect(double x, double lo, double hi) {
  const double width = hi - lo;
  if (width <= 0.0) return lo;
  double t = std::fmod(x - lo, 2.0 * width);
  if (t < 0.0) t += 2.0 * width;
  return t <= width ? lo + t : hi - (t - width);
}

class Run {
 public:
  Run(const ObjectiveFn& f, const Box& box, int budget, std::uint64_t seed,
      const AnnealOptions& options)
      : f_(f), box_(box), budget_(budget), options_(options), rng_(seed),
        visitor_(options.visiting_param) {}

  OptimResult go() {
    const std::size_t dim = box_.size();
    best_.x.assign(dim, 0.0);
    best_.value = kInf;

    std::vector<double> current(dim);
    double current_value = kInf;
    // A few random starts in case the first lands where the objective is undefined.
    for (int attempt = 0; attempt < 10 && !exhausted(); ++attempt) {
      for (std::size_t i = 0; i < dim; ++i) {
        current[i] = box_.lower[i] + rng_.uniform() * (box_.upper[i] - box_.lower[i]);
      }
      current_value = eval(current);
      if (std::isfinite(current_value)) break;
    }

    const double qv = options_.visiting_param;
    const double qa = options_.acceptance_param;
    const double t1 = std::exp((qv - 1.0) * std::log(2.0)) - 1.0;
    const double restart_temp = options_.initial_temp * options_.restart_temp_ratio;
    std::vector<double> candidate(dim);
    int iteration = 0;

    while (!exhausted()) {
      const double s = static_cast<double>(iteration) + 2.0;
      const double t2 = std::exp((qv - 1.0) * std::log(s)) - 1.0;
      const double temperature = options_.initial_temp * t1 / t2;
      if (iteration > 0 && temperature < restart_temp) {
        // Reanneal from a fresh random point.
        iteration = 0;
        for (std::size_t i = 0; i < dim; ++i) {
          current[i] = box_.lower[i] + rng_.uniform() * (box_.upper[i] - box_.lower[i]);
        }
        current_value = eval(current);
        continue;
      }
      const double accept_temp = temperature / (static_cast<double>(iteration) + 1.0);
      const double before = best_.value;

      // Markov chain: first move all coordinates at once, then one at a time.
      for (std::size_t j = 0; j < 2 * dim && !exhausted(); ++j) {
        candidate = current;
        if (j < dim) {
          for (std::size_t i = 0; i < dim; ++i) {
            candidate[i] = reflect(current[i] + visitor_.draw(temperature, rng_) * scale(i),
                                   box_.lower[i], box_.upper[i]);
          }
        } else {
          const std::size_t i = j - dim;
          candidate[i] = reflect(current[i] + visitor_.draw(temperature, rng_) * scale(i),
                                 box_.lower[i], box_.upper[i]);
        }
        const double value = eval(candidate);
        bool accept = value < current_value;
        if (!accept && std::isfinite(value)) {
          const double r = rng_.uniform();
          const double base = 1.0 - (1.0 - qa) * (value - current_value) / accept_temp;
          const double prob = base <= 0.0 ? 0.0 : std::exp(std::log(base) / (1.0 - qa));
          accept = r <= prob;
        }
        if (accept) {
          current = candidate;
          current_value = value;
        }
      }

      if (options_.local_search && best_.value < before && !exhausted()) {
        polish();
        if (best_.value < current_value) {
          current = best_.x;
          current_value = best_.value;
        }
      }
      ++iteration;
      ++best_.iterations;
    }
    best_.converged = std::isfinite(best_.value);
    return best_;
  }

 private:
  [[nodiscard]] bool exhausted() const noexcept { return best_.evaluations >= budget_; }

  // Steps are drawn for a unit box and rescaled per coordinate.
  [[nodiscard]] double scale(std::size_t i) const noexcept {
    return (box_.upper[i] - box_.lower[i]) * 0.1;
  }

  double eval(const std::vector<double>& x) {
    ++best_.evaluations;
    double value;
    try {
      value = f_(x);
    } catch (const Error&) {
      value = kInf;
    }
    if (!std::isfinite(value)) value = kInf;
    if (value < best_.value) {
      best_.value = value;
      best_.x = x;
    }
    return value;
  }

  void polish() {
    BoxMinimizeOptions local;
    local.max_evaluations = std::min(budget_ - best_.evaluations,
                                     options_.local_evaluations_per_dim *
                                         static_cast<int>(box_.size()));
    if (local.max_evaluations < 4 * static_cast<int>(box_.size())) return;
    int used = 0;
    auto counted = [&](std::span<const double> x) {
      ++used;
      double value;
      try {
        value = f_(x);
      } catch (const Error&) {
        value = kInf;
      }
      return std::isfinite(value) ? value : kInf;
    };
    const OptimResult r = minimize_box(counted, best_.x, box_, local);
    best_.evaluations += used;
    if (r.value < best_.value) {
      best_.value = r.value;
      best_.x = r.x;
    }
  }

  const ObjectiveFn& f_;
  const Box& box_;
  int budget_;
  AnnealOptions options_;
  Rng rng_;
  Visitor visitor_;
  OptimResult best_;
};

}  // namespace

OptimResult anneal(const ObjectiveFn& f, const Box& box, int budget, std::uint64_t seed,
                   const AnnealOptions& options) {
  box.validate();
  if (budget < 1) throw ConfigError("anneal: budget must be positive");
  return Run(f, box, budget, seed, options).go();
}

}  // namespace depcen
