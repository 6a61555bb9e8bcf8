#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace depcen {

enum class MarginalFamily { Exponential, Weibull, LogNormal };

std::string_view to_string(MarginalFamily family) noexcept;
/// Accepts "exp"/"exponential", "weibull", "lognormal"/"lnorm"/"log-normal".
MarginalFamily parse_marginal_family(std::string_view name);

/// Number of free parameters of a family (1 for Exponential, 2 otherwise).
[[nodiscard]] constexpr std::size_t coord_count(MarginalFamily f) noexcept {
  return f == MarginalFamily::Exponential ? 1 : 2;
}

/// Parametric survival-time distribution.
///
/// Weibull uses S(t) = exp(-scale * t^shape): the scale multiplies t^shape.
/// The alternative (scale * t)^shape convention maps to this one via
/// scale_here = scale_there^shape.
class MarginalSpec {
 public:
  MarginalSpec() = default;

  static MarginalSpec exponential(double rate);
  static MarginalSpec weibull(double shape, double scale);
  /// mu and sigma of log-time.
  static MarginalSpec lognormal(double mu, double sigma);

  /// Search coordinates: Exponential {rate}, Weibull {shape, scale},
  /// LogNormal {mu, sigma^2}.
  static MarginalSpec from_coords(MarginalFamily family, std::span<const double> coords);
  void write_coords(std::span<double> out) const;

  [[nodiscard]] MarginalFamily family() const noexcept { return family_; }
  /// Rate (Exponential) or scale (Weibull).
  [[nodiscard]] double scale() const noexcept { return a_; }
  [[nodiscard]] double shape() const noexcept {
    return family_ == MarginalFamily::Weibull ? b_ : 1.0;
  }
  [[nodiscard]] double mu() const noexcept { return a_; }
  [[nodiscard]] double sigma() const noexcept { return b_; }

  /// Inverse of parse_marginal_spec, e.g. "weibull:0.63,0.06".
  [[nodiscard]] std::string describe() const;

  friend bool operator==(const MarginalSpec&, const MarginalSpec&) = default;

 private:
  MarginalSpec(MarginalFamily family, double a, double b) : family_(family), a_(a), b_(b) {}

  MarginalFamily family_ = MarginalFamily::Exponential;
  double a_ = 1.0;  // rate / scale / mu
  double b_ = 1.0;  // shape / sigma
};

/// Parses `family:param[,param]`: exp:rate, weibull:shape,scale,
/// lognormal:mu,sigma. Throws ConfigError.
MarginalSpec parse_marginal_spec(std::string_view text);

double survival(const MarginalSpec& m, double t);
double cdf(const MarginalSpec& m, double t);
double pdf(const MarginalSpec& m, double t);
double hazard(const MarginalSpec& m, double t);
double log_pdf(const MarginalSpec& m, double t);
double log_survival(const MarginalSpec& m, double t);

/// Time t with survival(t) = u; u in (0, 1].
double inverse_survival(const MarginalSpec& m, double u);

/// Survival evaluated at log-time y (t = e^y).
double survival_at_log_time(const MarginalSpec& m, double y) noexcept;
/// Phi^{-1}(survival) at log-time y, accurate in both tails.
double survival_normal_score(const MarginalSpec& m, double y);

/// Log-time y = log S^{-1}(s) given log of the cumulative hazard log(-log s)
/// and the normal score z = Phi^{-1}(1 - s). Both are properties of s alone,
/// which lets quadrature rules precompute them per node.
[[nodiscard]] inline double log_time_from_node(const MarginalSpec& m, double log_cum_hazard,
                                               double normal_score_of_cdf) noexcept;

struct CurvePoint {
  double time = 0.0;
  double survival = 1.0;
};

/// Least-squares fit of a family's survival function to (time, survival)
/// points. Requires at least three points with positive times, survival in
/// (0, 1) and at least three distinct survival levels; throws FitError
/// otherwise.
MarginalSpec fit_to_curve(std::span<const CurvePoint> points, MarginalFamily family);

// ---------------------------------------------------------------------------

inline double log_time_from_node(const MarginalSpec& m, double log_cum_hazard,
                                 double normal_score_of_cdf) noexcept {
  switch (m.family()) {
    case MarginalFamily::Exponential:
      return log_cum_hazard - std::log(m.scale());
    case MarginalFamily::Weibull:
      return (log_cum_hazard - std::log(m.scale())) / m.shape();
    case MarginalFamily::LogNormal:
      return m.mu() + m.sigma() * normal_score_of_cdf;
  }
  return 0.0;
}

}  // namespace depcen
