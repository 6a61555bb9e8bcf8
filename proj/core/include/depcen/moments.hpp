#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "depcen/copula.hpp"
#include "depcen/datagen.hpp"
#include "depcen/marginal.hpp"
#include "depcen/rng.hpp"

namespace depcen {

/// (p, mu1, mu2, var1, var2): event proportion, then mean and variance of
/// log-time among events and among censorings.
struct MomentVector {
  double p = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;

  [[nodiscard]] std::array<double, 5> as_array() const noexcept { return {p, mu1, mu2, var1, var2}; }
  static MomentVector from_array(const std::array<double, 5>& a) noexcept {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
};

/// Marginals of T and C plus Kendall's tau of the pair.
struct ThetaVector {
  MarginalSpec t;
  MarginalSpec c;
  double tau = 0.0;
};

/// What is held fixed while theta varies. `rotated` models negative
/// dependence: the copula is applied to (S_T(T), 1 - S_C(C)), which is the
/// same as fitting the family to T and a decreasing transform of C.
struct ModelSpec {
  CopulaFamily copula = CopulaFamily::Normal;
  MarginalFamily family_t = MarginalFamily::LogNormal;
  MarginalFamily family_c = MarginalFamily::LogNormal;
  bool rotated = false;

  [[nodiscard]] std::size_t dimension() const noexcept {
    return coord_count(family_t) + coord_count(family_c) + 1;
  }
};

/// Flat coordinates: T's marginal coordinates, C's, then tau.
std::vector<double> to_coords(const ThetaVector& theta);
ThetaVector theta_from_coords(const ModelSpec& model, std::span<const double> coords);

/// Copula of the family at Kendall's tau; |tau| < 1e-6 gives independence.
CopulaSpec copula_at(CopulaFamily family, double tau);

/// Throws MomentUndefinedError unless there are at least two events and two
/// censorings. Variances divide by the group size.
MomentVector sample_moments(std::span<const SurvivalRecord> data);

/// Closed form for log-normal marginals joined by a Normal copula, with
/// rho = sin(pi tau / 2) the correlation of the latent normals.
MomentVector theoretical_moments_normal(const ThetaVector& theta, bool rotated = false);

/// Simulated moments from m_draws latent pairs driven by a uniform stream
/// fixed by crn_seed.
MomentVector theoretical_moments_mc(CopulaFamily family, const ThetaVector& theta,
                                    std::size_t m_draws, std::uint64_t crn_seed,
                                    bool rotated = false);

struct QuadratureOptions {
  /// Trapezoid spacing on the normal-score scale of the integration variable.
  double step = 0.05;
  double z_max = 8.5;
};

/// Deterministic numerical integration of the five moments over the
/// marginal survival of T (events) and of C (censorings).
MomentVector theoretical_moments_quadrature(CopulaFamily family, const ThetaVector& theta,
                                            const QuadratureOptions& options = {},
                                            bool rotated = false);

enum class EngineKind { ClosedForm, Quadrature, MonteCarlo };

std::string_view to_string(EngineKind kind) noexcept;
EngineKind parse_engine_kind(std::string_view name);

/// Theoretical-moment map with its expensive setup (quadrature nodes or the
/// common random numbers) done once. Copies share the immutable setup.
class MomentEngine {
 public:
  static MomentEngine closed_form();
  static MomentEngine quadrature(const QuadratureOptions& options = {});
  static MomentEngine monte_carlo(std::size_t m_draws, std::uint64_t crn_seed);

  [[nodiscard]] EngineKind kind() const noexcept { return kind_; }
  /// Whether the engine can evaluate this model (closed form needs
  /// log-normal marginals and a Normal or independence copula).
  [[nodiscard]] bool supports(const ModelSpec& model) const noexcept;

  MomentVector operator()(const ModelSpec& model, const ThetaVector& theta) const;

  struct Nodes;
  struct Draws;

 private:
  EngineKind kind_ = EngineKind::ClosedForm;
  std::shared_ptr<const Nodes> nodes_;
  std::shared_ptr<const Draws> draws_;
};

/// Inverse bootstrap variances of the sample moments, floored at 1e-10.
struct WeightMatrix {
  std::array<double, 5> diag{1.0, 1.0, 1.0, 1.0, 1.0};

  static WeightMatrix identity() noexcept { return {}; }
};

/// Throws EstimationError if more than half the replicates lack a moment.
WeightMatrix weight_matrix(std::span<const SurvivalRecord> data, std::size_t b_weight,
                           std::uint64_t seed, unsigned threads = 1);

/// (m - target)' W (m - target).
double quadratic_form(const MomentVector& m, const MomentVector& target,
                      const WeightMatrix& w) noexcept;

/// Q_n(theta) for the model under the given engine.
double objective(const ModelSpec& model, const ThetaVector& theta, const MomentVector& target,
                 const WeightMatrix& w, const MomentEngine& engine);

/// Data sorted by (x, delta); resampling from it makes results independent
/// of input row order.
std::vector<SurvivalRecord> canonical_order(std::span<const SurvivalRecord> data);

/// Nonparametric bootstrap resample drawn from `sorted`.
std::vector<SurvivalRecord> resample(std::span<const SurvivalRecord> sorted, Rng& rng);

}  // namespace depcen
