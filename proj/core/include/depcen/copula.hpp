#pragma once

#include <string>
#include <string_view>

namespace depcen {

enum class CopulaFamily { Normal, Clayton, Gumbel, Frank, Independence };

std::string_view to_string(CopulaFamily family) noexcept;
/// Case-insensitive; accepts "normal"/"gaussian", "clayton", "gumbel", "frank",
/// "independence"/"indep". Throws ConfigError otherwise.
CopulaFamily parse_copula_family(std::string_view name);

[[nodiscard]] constexpr bool is_archimedean(CopulaFamily f) noexcept {
  return f == CopulaFamily::Clayton || f == CopulaFamily::Gumbel || f == CopulaFamily::Frank;
}

/// A point of the unit square.
struct UnitPair {
  double u = 0.0;
  double v = 0.0;
};

/// Copula family plus its dependence parameter.
///
/// Parameter domains: Normal (-1, 1), Clayton (0, inf), Gumbel [1, inf),
/// Frank nonzero. Independence carries no parameter (param() returns 0).
class CopulaSpec {
 public:
  CopulaSpec() = default;
  /// Throws DomainError when `param` is outside the family's domain.
  CopulaSpec(CopulaFamily family, double param);

  static CopulaSpec independence() { return {}; }

  [[nodiscard]] CopulaFamily family() const noexcept { return family_; }
  [[nodiscard]] double param() const noexcept { return param_; }

  friend bool operator==(const CopulaSpec&, const CopulaSpec&) = default;

 private:
  CopulaFamily family_ = CopulaFamily::Independence;
  double param_ = 0.0;
};

/// C(u, v).
double cdf(const CopulaSpec& c, UnitPair p);

/// dC/du = Pr(V <= v | U = u). Requires u in (0, 1); arguments are clamped to
/// [1e-12, 1 - 1e-12] before evaluation.
double partial_u(const CopulaSpec& c, UnitPair p);
/// dC/dv = Pr(U <= u | V = v); all supported families are exchangeable.
double partial_v(const CopulaSpec& c, UnitPair p);

/// Same as partial_u / partial_v but never throws: boundary arguments are
/// clamped. Used on likelihood and moment hot paths.
double partial_u_clamped(const CopulaSpec& c, double u, double v) noexcept;
double partial_v_clamped(const CopulaSpec& c, double u, double v) noexcept;

/// Solves partial_u(c, (u, v)) = w for v. Closed form for Normal, Clayton,
/// Frank and Independence; bisection (at most 200 steps) for Gumbel.
double conditional_inverse(const CopulaSpec& c, double u, double w);

/// Kendall's tau implied by the copula.
double tau_from_param(const CopulaSpec& c);

/// Copula of `family` with the given Kendall's tau. tau == 0 yields
/// Independence for every family. Normal accepts tau in (-0.95, 0.95); the
/// Archimedean families accept (0, 0.95]. Frank is inverted by bisection.
CopulaSpec param_from_tau(CopulaFamily family, double tau);

/// Archimedean generator phi(t) and its inverse; Independence uses -log t.
/// Throws DomainError for the Normal family.
double generator(const CopulaSpec& c, double t);
double generator_inverse(const CopulaSpec& c, double s);

}  // namespace depcen
