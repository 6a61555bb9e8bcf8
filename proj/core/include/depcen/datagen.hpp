#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "depcen/copula.hpp"
#include "depcen/marginal.hpp"

namespace depcen {

/// One observed subject: follow-up time x = min(T, C) and delta = 1{T <= C}.
struct SurvivalRecord {
  double x = 0.0;
  int delta = 0;

  friend bool operator==(const SurvivalRecord&, const SurvivalRecord&) = default;
};

struct RctRecord {
  double x = 0.0;
  int delta = 0;
  int trt = 0;

  friend bool operator==(const RctRecord&, const RctRecord&) = default;
};

/// Latent (event, censoring) pair before censoring.
struct LatentPair {
  double t = 0.0;
  double c = 0.0;
};

/// Binary treatment acting multiplicatively on both hazards.
struct RctConfig {
  double beta_t = 0.0;
  double beta_c = 0.0;
  double trt_prob = 0.5;
};

struct GenConfig {
  CopulaSpec copula;
  MarginalSpec marginal_t;
  MarginalSpec marginal_c;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<RctConfig> rct;

  /// Throws ConfigError on n == 0 or an invalid treatment probability.
  void validate() const;
};

/// Draws n latent pairs by the conditional-CDF method: u ~ U(0,1),
/// w ~ U(0,1), v = conditional_inverse(copula, u, w), then
/// T = S_T^{-1}(u), C = S_C^{-1}(v). Subject i uses its own substream of
/// the seed, so the first k subjects do not depend on n.
std::vector<LatentPair> sample_pairs(const GenConfig& cfg);

/// x = min(t, c); delta = 1 iff t <= c (ties count as events).
std::vector<SurvivalRecord> censor(std::span<const LatentPair> pairs);

/// Treatment scenario: trt ~ Bernoulli(trt_prob) from the subject's third
/// draw, T Weibull and C exponential with hazards scaled by exp(beta * trt).
/// `latent` receives the uncensored pairs when non-null.
std::vector<RctRecord> sample_rct(const GenConfig& cfg, std::vector<LatentPair>* latent = nullptr);

/// Drops the treatment column.
std::vector<SurvivalRecord> pool_arms(std::span<const RctRecord> records);

}  // namespace depcen
