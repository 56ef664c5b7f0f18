#pragma once

#include "dcenv/core.hpp"

#include <memory>
#include <string>

namespace dcenv {

/// An extended-real function exposed through its value and proximal map.
///
/// Implementations are immutable after construction; every query is const and
/// safe to call concurrently. Functions may be hypoconvex: f + (rho/2)|.|^2 is
/// convex for rho = weak_convexity(), and the prox is then only defined for
/// stepsizes with gamma * rho < 1.
class ProxFunction {
public:
  virtual ~ProxFunction() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;

  /// f(x), possibly +inf outside the effective domain.
  virtual double value(const Vec &x) const = 0;

  /// argmin_w f(w) + |w - x|^2 / (2 gamma).
  Vec prox_at(const Vec &x, double gamma) const {
    require_dim(x, dim(), "prox_at");
    require_positive(gamma, "prox stepsize");
    if (gamma * weak_convexity() >= 1.0)
      throw ParameterError(name() + ": stepsize too large for a hypoconvex function (gamma*rho >= 1)");
    return do_prox(x, gamma);
  }

  /// argmin_w f(w) + |w - x|^2_{Gamma^{-1}} / 2 for diagonal Gamma. Only
  /// separable atoms and quadratics provide it; see supports_diagonal().
  Vec prox_diagonal_at(const Vec &x, const DiagonalStepsize &gamma) const {
    require_dim(x, dim(), "prox_diagonal_at");
    require_dim(gamma.entries(), dim(), "prox_diagonal_at stepsize");
    if (gamma.entries().maxCoeff() * weak_convexity() >= 1.0)
      throw ParameterError(name() + ": diagonal stepsize too large for a hypoconvex function");
    if (!supports_diagonal())
      throw CapabilityError(name() + " does not support a diagonal-metric prox");
    return do_prox_diagonal(x, gamma.entries());
  }

  virtual bool supports_diagonal() const { return false; }

  /// True when x -> prox(x, gamma) is affine for every gamma; the linear part
  /// is then available through prox_linear_part().
  virtual bool prox_is_affine() const { return false; }

  /// L with prox(x + d) = prox(x) + L d.
  virtual Vec prox_linear_part(const Vec &d, double gamma) const {
    (void)d;
    (void)gamma;
    throw CapabilityError(name() + " has no affine prox");
  }

  /// Smallest rho >= 0 such that f + (rho/2)|.|^2 is convex.
  virtual double weak_convexity() const { return 0.0; }

protected:
  virtual Vec do_prox(const Vec &x, double gamma) const = 0;
  virtual Vec do_prox_diagonal(const Vec &x, const Vec &gamma) const {
    (void)x;
    (void)gamma;
    throw CapabilityError(name() + " does not support a diagonal-metric prox");
  }
};

using ProxPtr = std::shared_ptr<const ProxFunction>;

/// f^gamma(x) = f(p) + |p - x|^2 / (2 gamma), p = prox_{gamma f}(x).
inline double moreau_value(const ProxFunction &f, double gamma, const Vec &x) {
  const Vec p = f.prox_at(x, gamma);
  return f.value(p) + (p - x).squaredNorm() / (2.0 * gamma);
}

/// (x - prox_{gamma f}(x)) / gamma.
inline Vec moreau_gradient(const ProxFunction &f, double gamma, const Vec &x) {
  return (x - f.prox_at(x, gamma)) / gamma;
}

/// Prox of f + (mu/2)|.|^2 with stepsize gamma_tilde, through
/// prox_{gamma f}(x / (1 + gamma_tilde mu)), gamma = gamma_tilde / (1 + gamma_tilde mu).
inline Vec prox_shifted(const ProxFunction &f, double mu, double gamma_tilde, const Vec &x) {
  require_positive(gamma_tilde, "prox_shifted stepsize");
  const double scale = 1.0 + gamma_tilde * mu;
  if (!(scale > 0.0))
    throw ParameterError("prox_shifted: 1 + gamma*mu must be positive");
  return f.prox_at(x / scale, gamma_tilde / scale);
}

/// Prox of f*/delta at t via the Moreau identity: t - prox_{delta f}(delta t) / delta.
inline Vec prox_conjugate(const ProxFunction &f, double delta, const Vec &t) {
  require_positive(delta, "prox_conjugate delta");
  return t - f.prox_at(delta * t, delta) / delta;
}

inline bool supports_diagonal(const ProxFunction &f) { return f.supports_diagonal(); }

/// Diagonal-metric prox. A uniform Gamma = gamma I reduces to the scalar prox
/// for every function, so the capability is only needed for non-uniform Gamma.
inline Vec prox_diag(const ProxFunction &f, const DiagonalStepsize &gamma, const Vec &x) {
  require_dim(gamma.entries(), f.dim(), "prox_diag stepsize");
  if (gamma.size() > 0 && gamma.is_uniform()) return f.prox_at(x, gamma[0]);
  return f.prox_diagonal_at(x, gamma);
}

/// max(0, f(z) - f(x) - <xi, z - x>) violation of the subgradient inequality.
/// Returns 0 when f(z) is +inf.
inline double subgradient_violation(const ProxFunction &f, const Vec &x, const Vec &xi,
                                    const Vec &z) {
  const double fz = f.value(z);
  if (fz == kInf) return 0.0;
  const double fx = f.value(x);
  if (fx == kInf) return kInf;
  return std::max(0.0, fx + xi.dot(z - x) - fz);
}

}  // namespace dcenv
