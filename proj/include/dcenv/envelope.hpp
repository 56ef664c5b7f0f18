#pragma once

#include "dcenv/atoms.hpp"
#include "dcenv/prox.hpp"
#include "dcenv/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>

namespace dcenv {

/// The DC problem minimize g(s) - h(s).
///
/// mu is a common hypoconvexity modulus: g + (mu/2)|.|^2 and h + (mu/2)|.|^2
/// are convex (mu = 0 for a plain convex pair). smooth_h, when present, is h
/// viewed as a smooth function and enables the FBE relations and the
/// gradient-based baselines.
struct DcInstance {
  ProxPtr g;
  ProxPtr h;
  double mu = 0.0;
  SmoothPtr smooth_h;

  Index dim() const { return g ? g->dim() : 0; }
  double phi(const Vec &x) const { return dc_difference(g->value(x), h->value(x)); }
};

inline DcInstance make_dc_instance(ProxPtr g, ProxPtr h, double mu = 0.0, SmoothPtr smooth_h = nullptr) {
  require(g != nullptr && h != nullptr, "DcInstance: g and h are required");
  require(g->dim() == h->dim(), "DcInstance: g and h dimensions differ");
  require(mu >= 0.0 && std::isfinite(mu), "DcInstance: mu must be finite and >= 0");
  const double slack = 1e-12 * (1.0 + mu);
  require(g->weak_convexity() <= mu + slack && h->weak_convexity() <= mu + slack,
          "DcInstance: g + (mu/2)|.|^2 and h + (mu/2)|.|^2 must both be convex");
  if (smooth_h) require(smooth_h->dim() == h->dim(), "DcInstance: smooth_h dimension differs");
  return DcInstance{std::move(g), std::move(h), mu, std::move(smooth_h)};
}

/// One evaluation of the envelope at s.
struct EnvelopeEval {
  Vec s;
  Vec u;  // prox_{gamma h}(s)
  Vec v;  // prox_{gamma g}(s)
  double env = 0.0;
  Vec grad;  // (u - v) / gamma
  double residual = 0.0;  // |u - v|
  double g_at_v = 0.0;
  double h_at_u = 0.0;
};

inline void check_envelope_stepsize(const DcInstance &inst, double gamma) {
  require_positive(gamma, "envelope stepsize gamma");
  if (!(gamma * inst.mu < 1.0))
    throw ParameterError("envelope stepsize must satisfy gamma * mu < 1");
}

/// Assembles the envelope from precomputed proxes u = prox_{gamma h}(s),
/// v = prox_{gamma g}(s).
inline EnvelopeEval envelope_from_proxes(const DcInstance &inst, double gamma, Vec s, Vec u, Vec v) {
  EnvelopeEval e;
  e.g_at_v = inst.g->value(v);
  e.h_at_u = inst.h->value(u);
  const double gv = e.g_at_v + (v - s).squaredNorm() / (2.0 * gamma);
  const double hu = e.h_at_u + (u - s).squaredNorm() / (2.0 * gamma);
  e.env = dc_difference(gv, hu);
  e.grad = (u - v) / gamma;
  e.residual = (u - v).norm();
  e.s = std::move(s);
  e.u = std::move(u);
  e.v = std::move(v);
  return e;
}

/// env(s) = g^gamma(s) - h^gamma(s), gradient (prox_{gamma h} - prox_{gamma g}) / gamma.
///
/// gamma is the stepsize applied to the raw pair; for hypoconvex instances it
/// must satisfy gamma * mu < 1 and the result coincides with the envelope of
/// the convexified pair (g, h) + (mu/2)|.|^2 at s / (1 - gamma mu). The two
/// proxes are independent of each other.
inline EnvelopeEval dce_eval(const DcInstance &inst, double gamma, const Vec &s) {
  check_envelope_stepsize(inst, gamma);
  require_dim(s, inst.dim(), "dce_eval");
  Vec u = inst.h->prox_at(s, gamma);
  Vec v = inst.g->prox_at(s, gamma);
  return envelope_from_proxes(inst, gamma, s, std::move(u), std::move(v));
}

struct SandwichBounds {
  double lower = 0.0;
  double env = 0.0;
  double upper = 0.0;
};

/// phi(v) + |v-u|^2/(2g) <= env(s) <= phi(u) - |v-u|^2/(2g), with g the
/// stepsize of the convexified pair (gamma / (1 - gamma mu)). A side whose
/// phi value is +inf is reported as +inf.
inline SandwichBounds sandwich_bounds(const DcInstance &inst, double gamma, const Vec &s) {
  const EnvelopeEval e = dce_eval(inst, gamma, s);
  const double shifted = gamma / (1.0 - gamma * inst.mu);
  const double gap = (e.v - e.u).squaredNorm() / (2.0 * shifted);
  const double phi_v = inst.phi(e.v);
  const double phi_u = inst.phi(e.u);
  SandwichBounds b;
  b.env = e.env;
  b.lower = phi_v == kInf ? kInf : phi_v + gap;
  b.upper = phi_u == kInf ? kInf : phi_u - gap;
  return b;
}

/// |prox_{gamma h}(s) - prox_{gamma g}(s)| <= tol.
inline bool is_stationary(const DcInstance &inst, double gamma, const Vec &s, double tol) {
  require(tol >= 0.0, "is_stationary: tol must be >= 0");
  return dce_eval(inst, gamma, s).residual <= tol;
}

/// prox_{-gamma f}(s): the u with s = u - gamma grad f(u).
inline Vec backward_smooth_prox(const SmoothFunction &f, double gamma, const Vec &s) {
  return f.backward_prox(s, gamma);
}

/// Forward-backward envelope f(u) - (gamma/2)|grad f(u)|^2 + g^gamma(u - gamma grad f(u)).
inline double fbe_value(const SmoothFunction &f, const ProxFunction &g, double gamma, const Vec &u) {
  require_positive(gamma, "fbe stepsize");
  if (!(gamma * f.lipschitz() < 1.0)) throw ParameterError("fbe_value needs gamma < 1/L_f");
  const Vec grad = f.gradient(u);
  return f.value(u) - 0.5 * gamma * grad.squaredNorm() + moreau_value(g, gamma, u - gamma * grad);
}

struct FbeDeviation {
  double max_abs = 0.0;
  double max_rel = 0.0;  // |env - fbe| / (1 + |env|)
};

/// Largest deviation between env(s), built on the pair (g, h = -f), and the
/// FBE evaluated at prox_{-gamma f}(s). h is passed explicitly so that an
/// independently implemented -f (e.g. a Quadratic with negated matrix) can
/// be checked against the backward prox of f.
inline FbeDeviation dce_fbe_equivalence_check(const SmoothFunction &f, ProxPtr g, ProxPtr h, double gamma,
                                              std::span<const Vec> samples) {
  if (!(gamma * f.lipschitz() < 1.0)) throw ParameterError("equivalence check needs gamma < 1/L_f");
  const double mu = std::max(g->weak_convexity(), h->weak_convexity());
  const DcInstance inst = make_dc_instance(std::move(g), std::move(h), mu);
  FbeDeviation out;
  for (const Vec &s : samples) {
    const double env = dce_eval(inst, gamma, s).env;
    const double fbe = fbe_value(f, *inst.g, gamma, backward_smooth_prox(f, gamma, s));
    const double dev = std::abs(env - fbe);
    out.max_abs = std::max(out.max_abs, dev);
    out.max_rel = std::max(out.max_rel, dev / (1.0 + std::abs(env)));
  }
  return out;
}

inline FbeDeviation dce_fbe_equivalence_check(SmoothPtr f, ProxPtr g, double gamma, std::span<const Vec> samples) {
  const SmoothFunction &ref = *f;
  return dce_fbe_equivalence_check(ref, std::move(g), std::make_shared<NegatedSmooth>(f), gamma, samples);
}

}  // namespace dcenv
