#pragma once

#include "dcenv/envelope.hpp"
#include "dcenv/report.hpp"

#include <cmath>
#include <sstream>

namespace dcenv {

/// minimize g(x) - h(x) - f(x) with f, g, h convex.
struct ThreeTermInstance {
  ProxPtr f;
  ProxPtr g;
  ProxPtr h;

  Index dim() const { return g ? g->dim() : 0; }
  double phi(const Vec &x) const {
    const double gx = g->value(x);
    if (gx == kInf) return kInf;
    return gx - h->value(x) - f->value(x);
  }
};

inline ThreeTermInstance make_three_term_instance(ProxPtr f, ProxPtr g, ProxPtr h) {
  require(f && g && h, "ThreeTermInstance: f, g and h are required");
  require(f->dim() == g->dim() && g->dim() == h->dim(), "ThreeTermInstance: dimensions differ");
  require(f->weak_convexity() == 0.0 && g->weak_convexity() == 0.0 && h->weak_convexity() == 0.0,
          "ThreeTermInstance: f, g and h must be convex");
  return ThreeTermInstance{std::move(f), std::move(g), std::move(h)};
}

/// Defaults sit at 90% of the admissible half-range.
struct ThreeProxConfig {
  double gamma = 0.5;
  double delta = 2.0;
  double lambda = 0.45;
  double mu = 0.45;
  double tol = 1e-6;
  int max_iter = 10000;
  bool record_trace = true;
};

/// 0 < gamma < 1 < delta, 0 < lambda < 2(1 - gamma), 0 < mu < 2(1 - 1/delta).
inline void validate(const ThreeProxConfig &cfg) {
  require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "three-prox: gamma must lie in (0, 1)");
  require(cfg.delta > 1.0 && std::isfinite(cfg.delta), "three-prox: delta must be > 1");
  require(cfg.lambda > 0.0 && cfg.lambda < 2.0 * (1.0 - cfg.gamma), "three-prox: lambda must lie in (0, 2(1 - gamma))");
  require(cfg.mu > 0.0 && cfg.mu < 2.0 * (1.0 - 1.0 / cfg.delta), "three-prox: mu must lie in (0, 2(1 - 1/delta))");
  require(cfg.tol >= 0.0, "tol must be >= 0");
  require(cfg.max_iter >= 1, "max_iter must be >= 1");
}

struct ThreeProxStep {
  Vec s_next, t_next;
  Vec u, v, z;
};

/// Stepsize of the h-prox, gamma delta / (delta - gamma).
inline double three_prox_h_step(const ThreeProxConfig &cfg) {
  return cfg.gamma * cfg.delta / (cfg.delta - cfg.gamma);
}

/// Argument of the h-prox, (delta s - gamma t) / (delta - gamma).
inline Vec three_prox_h_point(const ThreeProxConfig &cfg, const Vec &s, const Vec &t) {
  return (cfg.delta * s - cfg.gamma * t) / (cfg.delta - cfg.gamma);
}

/// u = prox_{gd/(d-g) h}((d s - g t)/(d - g)), v = prox_{g g}(s), z = prox_{d f}(t);
/// s+ = s + lambda (v - u), t+ = t + mu (u - z). Both updates read the
/// pre-update state.
inline ThreeProxStep three_prox_step(const ThreeTermInstance &inst, const ThreeProxConfig &cfg, const Vec &s,
                                     const Vec &t) {
  validate(cfg);
  require_dim(s, inst.dim(), "three_prox_step s");
  require_dim(t, inst.dim(), "three_prox_step t");
  ThreeProxStep out;
  out.u = inst.h->prox_at(three_prox_h_point(cfg, s, t), three_prox_h_step(cfg));
  out.v = inst.g->prox_at(s, cfg.gamma);
  out.z = inst.f->prox_at(t, cfg.delta);
  out.s_next = s + cfg.lambda * (out.v - out.u);
  out.t_next = t + cfg.mu * (out.u - out.z);
  return out;
}

namespace detail {

inline double psi_from_proxes(const ThreeTermInstance &inst, const ThreeProxConfig &cfg, const Vec &s,
                              const Vec &t, const Vec &u, const Vec &v, const Vec &z) {
  const double eta = three_prox_h_step(cfg);
  const Vec w = three_prox_h_point(cfg, s, t);
  const double g_env = inst.g->value(v) + (v - s).squaredNorm() / (2.0 * cfg.gamma);
  const double f_env = inst.f->value(z) + (z - t).squaredNorm() / (2.0 * cfg.delta);
  const double h_env = inst.h->value(u) + (u - w).squaredNorm() / (2.0 * eta);
  if (g_env == kInf) return kInf;
  return g_env - f_env - h_env + (s - t).squaredNorm() / (2.0 * (cfg.delta - cfg.gamma));
}

}  // namespace detail

/// Psi(s, t) = g^gamma(s) - f^delta(t) - h^{gd/(d-g)}((d s - g t)/(d - g)) + |s - t|^2 / (2 (d - g)).
inline double psi_value(const ThreeTermInstance &inst, const ThreeProxConfig &cfg, const Vec &s, const Vec &t) {
  validate(cfg);
  const double eta = three_prox_h_step(cfg);
  const Vec w = three_prox_h_point(cfg, s, t);
  const double g_env = moreau_value(*inst.g, cfg.gamma, s);
  if (g_env == kInf) return kInf;
  return g_env - moreau_value(*inst.f, cfg.delta, t) - moreau_value(*inst.h, eta, w) +
         (s - t).squaredNorm() / (2.0 * (cfg.delta - cfg.gamma));
}

/// |(s+, t+) - ((s, t) - diag(gamma lambda I, delta mu I) grad Psi)| with grad Psi
/// from central differences (step fd_scale (1 + |(s, t)|)).
inline double psi_gradient_identity_check(const ThreeTermInstance &inst, const ThreeProxConfig &cfg,
                                          const Vec &s, const Vec &t, double fd_scale = 1e-5) {
  const ThreeProxStep step = three_prox_step(inst, cfg, s, t);
  const Index n = s.size();
  const double hstep = fd_scale * (1.0 + std::sqrt(s.squaredNorm() + t.squaredNorm()));
  Vec grad_s(n), grad_t(n);
  for (Index i = 0; i < n; ++i) {
    Vec sp = s, sm = s;
    sp[i] += hstep;
    sm[i] -= hstep;
    grad_s[i] = (psi_value(inst, cfg, sp, t) - psi_value(inst, cfg, sm, t)) / (2.0 * hstep);
    Vec tp = t, tm = t;
    tp[i] += hstep;
    tm[i] -= hstep;
    grad_t[i] = (psi_value(inst, cfg, s, tp) - psi_value(inst, cfg, s, tm)) / (2.0 * hstep);
  }
  const Vec ds = step.s_next - (s - cfg.gamma * cfg.lambda * grad_s);
  const Vec dt = step.t_next - (t - cfg.delta * cfg.mu * grad_t);
  return std::sqrt(ds.squaredNorm() + dt.squaredNorm());
}

/// Per-block weights of the guaranteed Psi decrease
/// (1/2)(w_s |u - v|^2 + w_t |u - z|^2).
struct ThreeProxWeights {
  double s_block = 0.0;
  double t_block = 0.0;
};

inline ThreeProxWeights three_prox_weights(const ThreeProxConfig &cfg) {
  ThreeProxWeights w;
  w.s_block = (2.0 - cfg.lambda / (1.0 - cfg.gamma)) * cfg.lambda / cfg.gamma;
  // lifted y-block: Gamma = 1/delta, Lambda = mu, M = 1, applied to (u - z)/delta
  w.t_block = (2.0 - cfg.mu / (1.0 - 1.0 / cfg.delta)) * cfg.mu / cfg.delta;
  return w;
}

/// Iterates until |(u - v, u - z)| <= tol or max_iter; every step is checked
/// against the guaranteed Psi decrease with a 1e-12 relative slack.
inline RunReport run3(const ThreeTermInstance &inst, const ThreeProxConfig &cfg, const Vec &s0, const Vec &t0) {
  validate(cfg);
  RunReport rep;
  rep.solver = "three-prox";
  const ThreeProxWeights weights = three_prox_weights(cfg);
  rep.descent_weight = std::min(weights.s_block, weights.t_block);
  if (inst.dim() == 0) {
    rep.termination = Termination::converged;
    return rep;
  }
  require_dim(s0, inst.dim(), "run3 s0");
  require_dim(t0, inst.dim(), "run3 t0");

  Stopwatch clock;
  CallCounts calls;
  Vec s = s0, t = t0;
  ThreeProxStep cur;
  double psi = 0.0;
  auto evaluate = [&](const Vec &ss, const Vec &tt) {
    cur = three_prox_step(inst, cfg, ss, tt);
    calls.prox_h += 1;
    calls.prox_g += 1;
    calls.prox_f += 1;
    calls.value_h += 1;
    calls.value_g += 1;
    calls.value_f += 1;
    psi = detail::psi_from_proxes(inst, cfg, ss, tt, cur.u, cur.v, cur.z);
  };
  try {
    evaluate(s, t);
  } catch (const NumericalError &err) {
    rep.termination = Termination::numerical_error;
    rep.message = err.what();
    return rep;
  }
  rep.env_initial = psi;
  rep.env_min = psi;
  while (true) {
    ++rep.iterations;
    const double residual = std::sqrt((cur.u - cur.v).squaredNorm() + (cur.u - cur.z).squaredNorm());
    if (cfg.record_trace) {
      TraceEntry e;
      e.iter = rep.iterations - 1;
      e.env = psi;
      e.residual = residual;
      e.phi = inst.phi(cur.v);
      e.step = rep.steps > 0 ? 1.0 : 0.0;
      e.calls = calls;
      e.wall_ns = clock.elapsed_ns();
      rep.trace.push_back(e);
    }
    if (!std::isfinite(psi)) {
      rep.termination = Termination::numerical_error;
      rep.message = "non-finite envelope value";
      break;
    }
    if (residual <= cfg.tol) {
      rep.termination = Termination::converged;
      break;
    }
    if (rep.iterations >= cfg.max_iter) {
      rep.termination = Termination::max_iter;
      break;
    }
    const double guaranteed =
        psi - 0.5 * (weights.s_block * (cur.u - cur.v).squaredNorm() + weights.t_block * (cur.u - cur.z).squaredNorm());
    const double psi_old = psi;
    const Vec s_next = cur.s_next;
    const Vec t_next = cur.t_next;
    try {
      evaluate(s_next, t_next);
    } catch (const NumericalError &err) {
      rep.termination = Termination::numerical_error;
      rep.message = err.what();
      break;
    }
    s = s_next;
    t = t_next;
    const double excess = psi - guaranteed;
    rep.max_descent_violation = std::max(rep.max_descent_violation, excess);
    rep.sum_sq_residual += residual * residual;
    ++rep.steps;
    if (excess > 1e-12 * (1.0 + std::abs(psi_old))) {
      std::ostringstream msg;
      msg << "Psi descent inequality violated at iteration " << rep.iterations - 1 << " by " << excess;
      rep.termination = Termination::numerical_error;
      rep.message = msg.str();
      break;
    }
    rep.env_min = std::min(rep.env_min, psi);
  }
  rep.final_s = s;
  rep.final_t = t;
  rep.final_u = cur.u;
  rep.final_v = cur.v;
  rep.final_z = cur.z;
  rep.calls = calls;
  return rep;
}

}  // namespace dcenv
