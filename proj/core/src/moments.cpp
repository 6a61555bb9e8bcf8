#include "depcen/moments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "depcen/error.hpp"
#include "depcen/parallel.hpp"
#include "depcen/special.hpp"

namespace depcen {

std::vector<double> to_coords(const ThetaVector& theta) {
  const std::size_t kt = coord_count(theta.t.family());
  std::vector<double> coords(kt + coord_count(theta.c.family()) + 1);
  theta.t.write_coords(std::span(coords).first(kt));
  theta.c.write_coords(std::span(coords).subspan(kt, coords.size() - kt - 1));
  coords.back() = theta.tau;
  return coords;
}

ThetaVector theta_from_coords(const ModelSpec& model, std::span<const double> coords) {
  if (coords.size() != model.dimension()) {
    throw ConfigError("theta coordinates: expected " + std::to_string(model.dimension()) +
                      " values, got " + std::to_string(coords.size()));
  }
  const std::size_t kt = coord_count(model.family_t);
  const std::size_t kc = coord_count(model.family_c);
  ThetaVector theta;
  theta.t = MarginalSpec::from_coords(model.family_t, coords.first(kt));
  theta.c = MarginalSpec::from_coords(model.family_c, coords.subspan(kt, kc));
  theta.tau = coords.back();
  return theta;
}

CopulaSpec copula_at(CopulaFamily family, double tau) {
  if (std::abs(tau) < 1e-6 || family == CopulaFamily::Independence) {
    return CopulaSpec::independence();
  }
  return param_from_tau(family, tau);
}

namespace {

struct GroupAccumulator {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double y) noexcept {
    count += 1.0;
    const double d = y - mean;
    mean += d / count;
    m2 += d * (y - mean);
  }
};

}  // namespace

MomentVector sample_moments(std::span<const SurvivalRecord> data) {
  GroupAccumulator events;
  GroupAccumulator censored;
  for (const auto& r : data) {
    if (!(r.x > 0.0)) throw DomainError("sample_moments: times must be positive");
    (r.delta == 1 ? events : censored).add(std::log(r.x));
  }
  if (events.count < 2.0 || censored.count < 2.0) {
    throw MomentUndefinedError("sample moments need at least two events and two censorings (got " +
                               std::to_string(static_cast<long>(events.count)) + " and " +
                               std::to_string(static_cast<long>(censored.count)) + ")");
  }
  MomentVector m;
  m.p = events.count / static_cast<double>(data.size());
  m.mu1 = events.mean;
  m.mu2 = censored.mean;
  m.var1 = events.m2 / events.count;
  m.var2 = censored.m2 / censored.count;
  return m;
}

MomentVector theoretical_moments_normal(const ThetaVector& theta, bool rotated) {
  if (theta.t.family() != MarginalFamily::LogNormal ||
      theta.c.family() != MarginalFamily::LogNormal) {
    throw ConfigError("closed-form moments need log-normal marginals");
  }
  if (!(theta.tau > -1.0 && theta.tau < 1.0)) throw DomainError("tau must lie in (-1,1)");
  double rho = std::sin(0.5 * kPi * theta.tau);
  if (rotated) rho = -rho;
  const double mt = theta.t.mu();
  const double mc = theta.c.mu();
  const double st = theta.t.sigma();
  const double sc = theta.c.sigma();

  const double m = mt - mc;
  const double s2 = st * st + sc * sc - 2.0 * rho * st * sc;
  if (!(s2 > 1e-300)) throw NumericError("closed-form moments: T - C on the log scale is degenerate");
  const double s = std::sqrt(s2);
  const double kappa = -m / s;
  const double phi_k = normal_pdf(kappa);
  const double zeta1 = phi_k / normal_cdf(kappa);
  const double zeta2 = phi_k / normal_cdf(-kappa);
  const double a1 = st * (st - rho * sc) / s;
  const double a2 = sc * (sc - rho * st) / s;

  MomentVector out;
  out.p = normal_cdf(kappa);
  out.mu1 = mt - a1 * zeta1;
  out.mu2 = mc - a2 * zeta2;
  out.var1 = st * st - a1 * a1 * (kappa * zeta1 + zeta1 * zeta1);
  out.var2 = sc * sc - a2 * a2 * (-kappa * zeta2 + zeta2 * zeta2);
  if (!std::isfinite(out.mu1) || !std::isfinite(out.mu2) || !std::isfinite(out.var1) ||
      !std::isfinite(out.var2)) {
    throw NumericError("closed-form moments: non-finite result");
  }
  return out;
}

std::string_view to_string(EngineKind kind) noexcept {
  switch (kind) {
    case EngineKind::ClosedForm: return "closed";
    case EngineKind::Quadrature: return "quadrature";
    case EngineKind::MonteCarlo: return "mc";
  }
  return "?";
}

EngineKind parse_engine_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "closed" || lower == "closed-form" || lower == "normal") return EngineKind::ClosedForm;
  if (lower == "quadrature" || lower == "quad") return EngineKind::Quadrature;
  if (lower == "mc" || lower == "monte-carlo" || lower == "montecarlo") return EngineKind::MonteCarlo;
  throw ConfigError("unknown moment engine '" + std::string(name) + "'");
}

// Per node: integration variable s = Phi(-z), the survival level of the
// integrated marginal.
struct MomentEngine::Nodes {
  std::vector<double> z;
  std::vector<double> s;
  std::vector<double> log_cum_hazard;
  std::vector<double> weight;
};

// Common random numbers and their cached transforms.
struct MomentEngine::Draws {
  std::vector<double> u;
  std::vector<double> w;
  std::vector<double> z_u;  // Phi^{-1}(u)
  std::vector<double> z_w;  // Phi^{-1}(w)
  std::vector<double> log_cum_hazard_u;  // log(-log u)
};

namespace {

std::shared_ptr<const MomentEngine::Nodes> make_nodes(const QuadratureOptions& options) {
  if (!(options.step > 0.0) || !(options.z_max > 0.0)) {
    throw ConfigError("quadrature: step and z_max must be positive");
  }
  auto nodes = std::make_shared<MomentEngine::Nodes>();
  const int half = static_cast<int>(std::floor(options.z_max / options.step));
  for (int i = -half; i <= half; ++i) {
    const double z = i * options.step;
    const double s = normal_cdf(-z);
    const double f = normal_cdf(z);
    const double neg_log_s = z < 0.0 ? -std::log1p(-f) : -std::log(s);
    nodes->z.push_back(z);
    nodes->s.push_back(s);
    nodes->log_cum_hazard.push_back(std::log(neg_log_s));
    nodes->weight.push_back(options.step * normal_pdf(z));
  }
  return nodes;
}

// Conditional probability that the other time exceeds the integrated one,
// at a node with own survival s (normal score -z) and the other marginal's
// survival at the same time given as a level and a normal score.
class Partial {
 public:
  Partial(CopulaFamily family, double tau, bool rotated)
      : copula_(copula_at(family, tau)), rotated_(rotated) {
    if (copula_.family() == CopulaFamily::Normal) {
      rho_ = rotated ? -copula_.param() : copula_.param();
      r_ = std::sqrt((1.0 - rho_) * (1.0 + rho_));
    }
  }

  [[nodiscard]] bool needs_score() const noexcept {
    return copula_.family() == CopulaFamily::Normal;
  }

  // d/d(own) C(own, other) for the first argument; `first` selects whether
  // the integrated marginal is the copula's first (T) or second (C) argument.
  [[nodiscard]] double operator()(bool first, double own, double own_score, double other,
                                  double other_score) const noexcept {
    switch (copula_.family()) {
      case CopulaFamily::Independence:
        return other;
      case CopulaFamily::Normal:
        return normal_cdf((other_score - rho_ * own_score) / r_);
      default:
        break;
    }
    if (!rotated_) {
      return first ? partial_u_clamped(copula_, own, other) : partial_v_clamped(copula_, other, own);
    }
    // C_rot(u, v) = u - C(u, 1 - v)
    if (first) return 1.0 - partial_u_clamped(copula_, own, 1.0 - other);
    return partial_v_clamped(copula_, other, 1.0 - own);
  }

 private:
  CopulaSpec copula_;
  bool rotated_;
  double rho_ = 0.0;
  double r_ = 1.0;
};

struct GroupMoments {
  double mass = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

// Integrates over the survival level of `own`; the other marginal's survival
// at the same time enters through the copula partial.
GroupMoments integrate_group(const MomentEngine::Nodes& nodes, const MarginalSpec& own,
                             const MarginalSpec& other, const Partial& partial, bool first) {
  thread_local std::vector<double> ys;
  thread_local std::vector<double> gs;
  const std::size_t count = nodes.z.size();
  ys.resize(count);
  gs.resize(count);
  double mass = 0.0;
  double first_moment = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double y = log_time_from_node(own, nodes.log_cum_hazard[k], nodes.z[k]);
    const double other_s = survival_at_log_time(other, y);
    const double other_score = partial.needs_score() ? survival_normal_score(other, y) : 0.0;
    const double g = nodes.weight[k] * partial(first, nodes.s[k], -nodes.z[k], other_s, other_score);
    ys[k] = y;
    gs[k] = g;
    mass += g;
    first_moment += g * y;
  }
  GroupMoments out;
  out.mass = mass;
  if (!(mass > 0.0)) return out;
  out.mean = first_moment / mass;
  double second = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double d = ys[k] - out.mean;
    second += gs[k] * d * d;
  }
  out.var = second / mass;
  return out;
}

MomentVector quadrature_moments(const MomentEngine::Nodes& nodes, CopulaFamily family,
                                const ThetaVector& theta, bool rotated) {
  const Partial partial(family, theta.tau, rotated);
  const GroupMoments ev = integrate_group(nodes, theta.t, theta.c, partial, true);
  const GroupMoments ce = integrate_group(nodes, theta.c, theta.t, partial, false);
  if (!(ev.mass > 1e-300) || !(ce.mass > 1e-300)) {
    throw MomentUndefinedError("quadrature moments: one outcome has zero probability");
  }
  MomentVector m;
  // The two masses sum to one up to quadrature error; averaging balances it.
  m.p = 0.5 * (ev.mass + 1.0 - ce.mass);
  m.mu1 = ev.mean;
  m.mu2 = ce.mean;
  m.var1 = ev.var;
  m.var2 = ce.var;
  return m;
}

std::shared_ptr<const MomentEngine::Draws> make_draws(std::size_t m_draws, std::uint64_t seed) {
  if (m_draws < 100) throw ConfigError("monte-carlo moments: m_draws must be at least 100");
  auto d = std::make_shared<MomentEngine::Draws>();
  d->u.resize(m_draws);
  d->w.resize(m_draws);
  d->z_u.resize(m_draws);
  d->z_w.resize(m_draws);
  d->log_cum_hazard_u.resize(m_draws);
  const Rng master(seed);
  for (std::size_t i = 0; i < m_draws; ++i) {
    Rng rng = master.split(i);
    const double u = rng.uniform();
    const double w = rng.uniform();
    d->u[i] = u;
    d->w[i] = w;
    d->z_u[i] = normal_quantile(u);
    d->z_w[i] = normal_quantile(w);
    d->log_cum_hazard_u[i] = std::log(-std::log(u));
  }
  return d;
}

double log_time_at(const MarginalSpec& m, double s, double score_of_survival) {
  // score_of_survival = Phi^{-1}(s), so Phi^{-1}(1 - s) is its negation.
  return log_time_from_node(m, std::log(-std::log(s)), -score_of_survival);
}

MomentVector mc_moments(const MomentEngine::Draws& d, CopulaFamily family, const ThetaVector& theta,
                        bool rotated) {
  const CopulaSpec copula = copula_at(family, theta.tau);
  const bool normal = copula.family() == CopulaFamily::Normal;
  double rho = normal ? copula.param() : 0.0;
  if (rotated) rho = -rho;
  const double r = std::sqrt((1.0 - rho) * (1.0 + rho));
  const bool c_needs_score = theta.c.family() == MarginalFamily::LogNormal;

  GroupAccumulator events;
  GroupAccumulator censored;
  const std::size_t count = d.u.size();
  for (std::size_t i = 0; i < count; ++i) {
    // U = S_T(T): survival level u has normal score z_u.
    const double y_t = log_time_from_node(theta.t, d.log_cum_hazard_u[i], -d.z_u[i]);
    double y_c;
    if (normal || copula.family() == CopulaFamily::Independence) {
      const double zv = normal ? rho * d.z_u[i] + r * d.z_w[i] : d.z_w[i];
      if (c_needs_score) {
        y_c = log_time_from_node(theta.c, 0.0, -zv);
      } else {
        const double v = std::clamp(normal ? normal_cdf(zv) : d.w[i], 1e-300, 1.0 - 0x1.0p-53);
        y_c = log_time_from_node(theta.c, std::log(-std::log(v)), 0.0);
      }
    } else {
      double v = conditional_inverse(copula, d.u[i], d.w[i]);
      if (rotated) v = 1.0 - v;
      v = std::clamp(v, 1e-300, 1.0 - 0x1.0p-53);
      y_c = log_time_at(theta.c, v, c_needs_score ? normal_quantile(v) : 0.0);
    }
    if (y_t <= y_c) {
      events.add(y_t);
    } else {
      censored.add(y_c);
    }
  }
  if (events.count < 2.0 || censored.count < 2.0) {
    throw MomentUndefinedError("monte-carlo moments: a simulated group is (nearly) empty");
  }
  MomentVector m;
  m.p = events.count / static_cast<double>(count);
  m.mu1 = events.mean;
  m.mu2 = censored.mean;
  m.var1 = events.m2 / events.count;
  m.var2 = censored.m2 / censored.count;
  return m;
}

}  // namespace

MomentVector theoretical_moments_quadrature(CopulaFamily family, const ThetaVector& theta,
                                            const QuadratureOptions& options, bool rotated) {
  return quadrature_moments(*make_nodes(options), family, theta, rotated);
}

MomentVector theoretical_moments_mc(CopulaFamily family, const ThetaVector& theta,
                                    std::size_t m_draws, std::uint64_t crn_seed, bool rotated) {
  return mc_moments(*make_draws(m_draws, crn_seed), family, theta, rotated);
}

MomentEngine MomentEngine::closed_form() { return MomentEngine{}; }

MomentEngine MomentEngine::quadrature(const QuadratureOptions& options) {
  MomentEngine e;
  e.kind_ = EngineKind::Quadrature;
  e.nodes_ = make_nodes(options);
  return e;
}

MomentEngine MomentEngine::monte_carlo(std::size_t m_draws, std::uint64_t crn_seed) {
  MomentEngine e;
  e.kind_ = EngineKind::MonteCarlo;
  e.draws_ = make_draws(m_draws, crn_seed);
  return e;
}

bool MomentEngine::supports(const ModelSpec& model) const noexcept {
  if (kind_ != EngineKind::ClosedForm) return true;
  return model.family_t == MarginalFamily::LogNormal && model.family_c == MarginalFamily::LogNormal &&
         (model.copula == CopulaFamily::Normal || model.copula == CopulaFamily::Independence);
}

MomentVector MomentEngine::operator()(const ModelSpec& model, const ThetaVector& theta) const {
  switch (kind_) {
    case EngineKind::ClosedForm: {
      if (!supports(model)) {
        throw ConfigError("closed-form engine needs log-normal marginals and a Normal copula");
      }
      const double tau = model.copula == CopulaFamily::Independence ? 0.0 : theta.tau;
      ThetaVector th = theta;
      th.tau = tau;
      return theoretical_moments_normal(th, model.rotated);
    }
    case EngineKind::Quadrature:
      return quadrature_moments(*nodes_, model.copula, theta, model.rotated);
    case EngineKind::MonteCarlo:
      return mc_moments(*draws_, model.copula, theta, model.rotated);
  }
  return {};
}

std::vector<SurvivalRecord> canonical_order(std::span<const SurvivalRecord> data) {
  std::vector<SurvivalRecord> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end(), [](const SurvivalRecord& a, const SurvivalRecord& b) {
    return a.x != b.x ? a.x < b.x : a.delta < b.delta;
  });
  return sorted;
}

std::vector<SurvivalRecord> resample(std::span<const SurvivalRecord> sorted, Rng& rng) {
  std::vector<SurvivalRecord> out(sorted.size());
  for (auto& r : out) r = sorted[rng.index(sorted.size())];
  return out;
}

WeightMatrix weight_matrix(std::span<const SurvivalRecord> data, std::size_t b_weight,
                           std::uint64_t seed, unsigned threads) {
  if (b_weight < 2) throw ConfigError("weight matrix: need at least two bootstrap replicates");
  const auto sorted = canonical_order(data);
  std::vector<std::array<double, 5>> reps(b_weight);
  std::vector<char> ok(b_weight, 0);
  const Rng master(seed);
  parallel_for(b_weight, threads, [&](std::size_t b) {
    Rng rng = master.split(b);
    const auto sample = resample(sorted, rng);
    try {
      reps[b] = sample_moments(sample).as_array();
      ok[b] = 1;
    } catch (const MomentUndefinedError&) {
    }
  });
  std::size_t good = 0;
  for (char flag : ok) good += flag ? 1 : 0;
  if (2 * good < b_weight || good < 2) {
    throw EstimationError("weight matrix: more than half of the bootstrap replicates lack moments");
  }
  WeightMatrix w;
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (std::size_t b = 0; b < b_weight; ++b) {
      if (ok[b]) mean += reps[b][j];
    }
    mean /= static_cast<double>(good);
    double ss = 0.0;
    for (std::size_t b = 0; b < b_weight; ++b) {
      if (ok[b]) ss += (reps[b][j] - mean) * (reps[b][j] - mean);
    }
    const double var = ss / static_cast<double>(good - 1);
    w.diag[j] = 1.0 / std::max(var, 1e-10);
  }
  return w;
}

double quadratic_form(const MomentVector& m, const MomentVector& target,
                      const WeightMatrix& w) noexcept {
  const auto a = m.as_array();
  const auto b = target.as_array();
  double q = 0.0;
  for (std::size_t j = 0; j < 5; ++j) q += w.diag[j] * (a[j] - b[j]) * (a[j] - b[j]);
  return q;
}

double objective(const ModelSpec& model, const ThetaVector& theta, const MomentVector& target,
                 const WeightMatrix& w, const MomentEngine& engine) {
  return quadratic_form(engine(model, theta), target, w);
}

}  // namespace depcen
