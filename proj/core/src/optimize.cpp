#include "depcen/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "depcen/error.hpp"

namespace depcen {

bool Box::contains(std::span<const double> x) const noexcept {
  if (x.size() != size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

void Box::project(std::span<double> x) const noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

void Box::validate() const {
  if (lower.size() != upper.size()) throw ConfigError("box: bound vectors differ in length");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      throw ConfigError("box: invalid bounds in coordinate " + std::to_string(i));
    }
  }
}

namespace {

double safe_eval(const ObjectiveFn& f, std::span<const double> x) {
  const double value = f(x);
  return std::isnan(value) ? std::numeric_limits<double>::infinity() : value;
}

}  // namespace

OptimResult nelder_mead(const ObjectiveFn& f, std::vector<double> start,
                        const NelderMeadOptions& options, const Box* box) {
  const std::size_t n = start.size();
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 1.0 / (2.0 * dn);
  const double delta = 1.0 - 1.0 / dn;

  OptimResult result;
  auto eval = [&](std::vector<double>& x) {
    if (box) box->project(x);
    ++result.evaluations;
    return safe_eval(f, x);
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double step = options.initial_step;
    if (box) step *= box->upper[i] - box->lower[i];
    if (step == 0.0) step = options.initial_step;
    if (box && simplex[i + 1][i] + step > box->upper[i]) step = -step;
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  while (result.evaluations < options.max_evaluations) {
    ++result.iterations;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    double x_spread = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        x_spread = std::max(x_spread, std::fabs(simplex[i][j] - simplex[best][j]));
      }
    }
    if (std::fabs(values[worst] - values[best]) <= options.f_tolerance &&
        x_spread <= std::max(options.x_tolerance, 1e3 * options.x_tolerance *
                                                      std::fabs(simplex[best][0]))) {
      result.converged = true;
      break;
    }
    if (x_spread <= options.x_tolerance * 1e-3) {
      result.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / dn;
    }
    for (std::size_t j = 0; j < n; ++j) {
      trial[j] = centroid[j] + alpha * (centroid[j] - simplex[worst][j]);
    }
    const double f_reflect = eval(trial);
    if (f_reflect < values[best]) {
      for (std::size_t j = 0; j < n; ++j) {
        trial2[j] = centroid[j] + beta * (trial[j] - centroid[j]);
      }
      const double f_expand = eval(trial2);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        values[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        values[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < values[second_worst]) {
      simplex[worst] = trial;
      values[worst] = f_reflect;
      continue;
    }
    const bool outside = f_reflect < values[worst];
    for (std::size_t j = 0; j < n; ++j) {
      trial2[j] = outside ? centroid[j] + gamma * (trial[j] - centroid[j])
                          : centroid[j] - gamma * (centroid[j] - simplex[worst][j]);
    }
    const double f_contract = eval(trial2);
    if (f_contract < std::min(f_reflect, values[worst])) {
      simplex[worst] = trial2;
      values[worst] = f_contract;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) {
        simplex[i][j] = simplex[best][j] + delta * (simplex[i][j] - simplex[best][j]);
      }
      values[i] = eval(simplex[i]);
    }
  }

  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  return result;
}

namespace {

class UnitCubeProblem {
 public:
  UnitCubeProblem(const ObjectiveFn& f, const Box& box, OptimResult& counters)
      : f_(f), box_(box), counters_(counters), x_(box.size()) {}

  double operator()(std::span<const double> z) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      x_[i] = box_.lower[i] + z[i] * (box_.upper[i] - box_.lower[i]);
    }
    ++counters_.evaluations;
    return safe_eval(f_, x_);
  }

  std::vector<double> to_unit(std::span<const double> x) const {
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double width = box_.upper[i] - box_.lower[i];
      z[i] = width > 0.0 ? std::clamp((x[i] - box_.lower[i]) / width, 0.0, 1.0) : 0.0;
    }
    return z;
  }

  std::vector<double> from_unit(std::span<const double> z) const {
    std::vector<double> x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      x[i] = box_.lower[i] + z[i] * (box_.upper[i] - box_.lower[i]);
    }
    box_.project(x);
    return x;
  }

 private:
  const ObjectiveFn& f_;
  const Box& box_;
  OptimResult& counters_;
  std::vector<double> x_;
};

}  // namespace

OptimResult minimize_box(const ObjectiveFn& f, std::vector<double> start, const Box& box,
                         const BoxMinimizeOptions& options) {
  box.validate();
  const std::size_t n = box.size();
  OptimResult result;
  UnitCubeProblem problem(f, box, result);
  box.project(start);
  std::vector<double> z = problem.to_unit(start);
  std::vector<bool> fixed(n);
  for (std::size_t i = 0; i < n; ++i) fixed[i] = box.upper[i] == box.lower[i];

  auto budget_left = [&] {
    return options.max_evaluations <= 0 || result.evaluations < options.max_evaluations;
  };

  double fz = problem(z);
  if (!std::isfinite(fz)) {
    result.x = problem.from_unit(z);
    result.value = fz;
    return result;
  }

  const double h = options.gradient_step;
  std::vector<double> g(n), g_new(n), trial(n), dir(n);
  auto gradient = [&](const std::vector<double>& at, double f_at, std::vector<double>& out) {
    std::vector<double> probe = at;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) {
        out[i] = 0.0;
        continue;
      }
      const double up = std::min(1.0, at[i] + h);
      const double down = std::max(0.0, at[i] - h);
      probe[i] = up;
      const double f_up = up > at[i] ? problem(probe) : f_at;
      probe[i] = down;
      const double f_down = down < at[i] ? problem(probe) : f_at;
      probe[i] = at[i];
      const double span = up - down;
      out[i] = span > 0.0 ? (f_up - f_down) / span : 0.0;
      if (!std::isfinite(out[i])) out[i] = 0.0;
    }
  };

  // Inverse Hessian approximation, dense n x n.
  std::vector<double> hinv(n * n, 0.0);
  auto reset_hessian = [&] {
    std::fill(hinv.begin(), hinv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
  };
  reset_hessian();
  gradient(z, fz, g);

  for (int iter = 0; iter < options.max_iterations && budget_left(); ++iter) {
    result.iterations = iter + 1;
    std::vector<bool> active(n, false);
    double proj_grad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      active[i] = fixed[i] || (z[i] <= 0.0 && g[i] > 0.0) || (z[i] >= 1.0 && g[i] < 0.0);
      if (!active[i]) proj_grad = std::max(proj_grad, std::fabs(g[i]));
    }
    if (proj_grad < 1e-12) {
      result.converged = true;
      break;
    }

    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dir[i] = 0.0;
      if (active[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!active[j]) dir[i] -= hinv[i * n + j] * g[j];
      }
      slope += dir[i] * g[i];
    }
    if (!(slope < 0.0)) {
      reset_hessian();
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dir[i] = active[i] ? 0.0 : -g[i];
        slope += dir[i] * g[i];
      }
    }
    // Keep the first trial step inside a unit-cube-sized neighborhood.
    double dir_norm = 0.0;
    for (double d : dir) dir_norm = std::max(dir_norm, std::fabs(d));
    double step = dir_norm > 0.5 ? 0.5 / dir_norm : 1.0;

    double f_trial = fz;
    bool accepted = false;
    for (int ls = 0; ls < 40 && budget_left(); ++ls) {
      double decrease_model = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = std::clamp(z[i] + step * dir[i], 0.0, 1.0);
        decrease_model += g[i] * (trial[i] - z[i]);
      }
      f_trial = problem(trial);
      if (f_trial <= fz + 1e-4 * decrease_model && f_trial <= fz) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // A failed search along a quasi-Newton direction is retried once along
      // the steepest-descent direction before giving up.
      bool was_identity = true;
      for (std::size_t i = 0; i < n && was_identity; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (hinv[i * n + j] != (i == j ? 1.0 : 0.0)) {
            was_identity = false;
            break;
          }
        }
      }
      if (was_identity) {
        result.converged = true;
        break;
      }
      reset_hessian();
      continue;
    }

    const double decrease = fz - f_trial;
    gradient(trial, f_trial, g_new);
    std::vector<double> s(n), y(n);
    double sy = 0.0;
    double yy = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial[i] - z[i];
      y[i] = g_new[i] - g[i];
      sy += s[i] * y[i];
      yy += y[i] * y[i];
      ss += s[i] * s[i];
    }
    z = trial;
    fz = f_trial;
    g = g_new;
    if (sy > 1e-10 * std::sqrt(yy * ss)) {
      // H+ = (I - r s y') H (I - r y s') + r s s'
      const double r = 1.0 / sy;
      std::vector<double> hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) hy[i] += hinv[i * n + j] * y[j];
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          hinv[i * n + j] += (1.0 + r * yhy) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
        }
      }
    }
    if (decrease < options.f_tolerance) {
      result.converged = true;
      break;
    }
  }

  result.x = problem.from_unit(z);
  result.value = fz;
  return result;
}

}  // namespace depcen
