#include "depcen/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "depcen/error.hpp"
#include "depcen/rng.hpp"

namespace depcen {

void GenConfig::validate() const {
  if (n == 0) throw ConfigError("generator: n must be at least 1");
  if (rct && !(rct->trt_prob > 0.0 && rct->trt_prob < 1.0)) {
    throw ConfigError("generator: treatment probability must lie in (0,1)");
  }
  if (rct && (!std::isfinite(rct->beta_t) || !std::isfinite(rct->beta_c))) {
    throw ConfigError("generator: treatment effects must be finite");
  }
}

namespace {

struct SubjectDraws {
  double u;
  double w;
  double trt;
};

// Keeps v inside (0,1) so that both latent times are finite and positive.
double interior(double v) noexcept { return std::clamp(v, 1e-300, 1.0 - 0x1.0p-53); }

SubjectDraws subject_draws(const Rng& master, std::size_t i) {
  Rng rng = master.split(i);
  SubjectDraws d{};
  d.u = rng.uniform();
  d.w = rng.uniform();
  d.trt = rng.uniform();
  return d;
}

}  // namespace

std::vector<LatentPair> sample_pairs(const GenConfig& cfg) {
  cfg.validate();
  const Rng master(cfg.seed);
  std::vector<LatentPair> pairs(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const SubjectDraws d = subject_draws(master, i);
    const double v = conditional_inverse(cfg.copula, d.u, d.w);
    pairs[i].t = inverse_survival(cfg.marginal_t, d.u);
    pairs[i].c = inverse_survival(cfg.marginal_c, interior(v));
  }
  return pairs;
}

std::vector<SurvivalRecord> censor(std::span<const LatentPair> pairs) {
  std::vector<SurvivalRecord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.t <= p.c) {
      out.push_back({p.t, 1});
    } else {
      out.push_back({p.c, 0});
    }
  }
  return out;
}

std::vector<RctRecord> sample_rct(const GenConfig& cfg, std::vector<LatentPair>* latent) {
  cfg.validate();
  if (!cfg.rct) throw ConfigError("sample_rct: treatment block missing");
  if (cfg.marginal_t.family() != MarginalFamily::Weibull ||
      cfg.marginal_c.family() != MarginalFamily::Exponential) {
    throw ConfigError("sample_rct: treatment mode requires a Weibull T and an exponential C");
  }
  const Rng master(cfg.seed);
  const RctConfig& rct = *cfg.rct;
  std::vector<RctRecord> out(cfg.n);
  if (latent) latent->assign(cfg.n, {});
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const SubjectDraws d = subject_draws(master, i);
    const int trt = d.trt < rct.trt_prob ? 1 : 0;
    const double v = interior(conditional_inverse(cfg.copula, d.u, d.w));
    const auto m_t = MarginalSpec::weibull(cfg.marginal_t.shape(),
                                           cfg.marginal_t.scale() * std::exp(rct.beta_t * trt));
    const auto m_c = MarginalSpec::exponential(cfg.marginal_c.scale() * std::exp(rct.beta_c * trt));
    const double t = inverse_survival(m_t, d.u);
    const double c = inverse_survival(m_c, v);
    if (latent) (*latent)[i] = {t, c};
    out[i] = t <= c ? RctRecord{t, 1, trt} : RctRecord{c, 0, trt};
  }
  return out;
}

std::vector<SurvivalRecord> pool_arms(std::span<const RctRecord> records) {
  std::vector<SurvivalRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.x, r.delta});
  return out;
}

}  // namespace depcen
