#pragma once

#include "dcenv/envelope.hpp"
#include "dcenv/report.hpp"
#include "dcenv/two_prox.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

namespace dcenv {

struct LbfgsOptions {
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_backtracks = 30;
};

/// Ring buffer of curvature pairs (ds, dg).
class LbfgsState {
public:
  explicit LbfgsState(int memory = 10) : memory_(memory) {
    require(memory >= 0, "L-BFGS memory must be >= 0");
  }

  /// Stores the pair only if <ds, dg> > 1e-12 |ds| |dg|; returns whether it was kept.
  bool update(const Vec &ds, const Vec &dg) {
    if (memory_ == 0) return false;
    const double curv = ds.dot(dg);
    if (!(curv > 1e-12 * ds.norm() * dg.norm())) return false;
    if (static_cast<int>(pairs_.size()) == memory_) pairs_.pop_front();
    pairs_.emplace_back(ds, dg);
    return true;
  }

  void reset() { pairs_.clear(); }
  int size() const { return static_cast<int>(pairs_.size()); }
  int capacity() const { return memory_; }
  bool empty() const { return pairs_.empty(); }
  const std::deque<std::pair<Vec, Vec>> &pairs() const { return pairs_; }

private:
  int memory_;
  std::deque<std::pair<Vec, Vec>> pairs_;
};

/// Two-loop recursion. Empty memory gives -gamma grad; otherwise the initial
/// inverse Hessian is <ds, dg>/<dg, dg> of the newest pair. A direction that
/// is not a descent direction (<d, grad> >= -1e-12 |d| |grad|) clears the
/// memory and falls back to -gamma grad.
inline Vec lbfgs_direction(LbfgsState &state, const Vec &grad, double gamma) {
  if (grad.isZero(0.0)) return Vec::Zero(grad.size());
  if (state.empty()) return -gamma * grad;

  const auto &pairs = state.pairs();
  const int m = state.size();
  std::vector<double> alpha(m), rho(m);
  Vec q = grad;
  for (int i = m - 1; i >= 0; --i) {
    const auto &[ds, dg] = pairs[i];
    rho[i] = 1.0 / dg.dot(ds);
    alpha[i] = rho[i] * ds.dot(q);
    q -= alpha[i] * dg;
  }
  const auto &[ds_new, dg_new] = pairs.back();
  Vec r = (ds_new.dot(dg_new) / dg_new.squaredNorm()) * q;
  for (int i = 0; i < m; ++i) {
    const auto &[ds, dg] = pairs[i];
    const double beta = rho[i] * dg.dot(r);
    r += (alpha[i] - beta) * ds;
  }
  Vec d = -r;
  if (!(d.dot(grad) < -1e-12 * d.norm() * grad.norm())) {
    state.reset();
    return -gamma * grad;
  }
  return d;
}

struct LineSearchResult {
  double alpha = 0.0;
  EnvelopeEval eval;
  int trials = 0;
  bool wolfe = false;     // both weak Wolfe conditions hold
  bool fallback = false;  // plain two-prox step s + lambda (v - u)
};

/// Weak Wolfe linesearch on the envelope along d, starting at alpha = 1,
/// bisecting on sufficient-decrease failures and doubling on curvature
/// failures. If the curvature condition is never met the largest point with
/// sufficient decrease is returned; if no trial decreases enough the plain
/// two-prox step s + lambda (v0 - u0) is returned instead.
///
/// When prox_{gamma h} is affine, prox_{gamma h}(s + a d) = u0 + a L d and a
/// single prox_h call serves the whole linesearch.
inline LineSearchResult wolfe_linesearch(const DcInstance &inst, double gamma, const Vec &s, const Vec &d,
                                         const EnvelopeEval &eval0, const LbfgsOptions &opts = {},
                                         double lambda = 1.0, CallCounts *calls = nullptr) {
  CallCounts local;
  CallCounts &cnt = calls ? *calls : local;
  const double slope = eval0.grad.dot(d);
  if (!(slope < 0.0)) throw ParameterError("wolfe_linesearch: d is not a descent direction");
  require(opts.c1 > 0.0 && opts.c1 < opts.c2 && opts.c2 < 1.0, "wolfe_linesearch: need 0 < c1 < c2 < 1");

  const bool affine = inst.h->prox_is_affine();
  Vec lin_h;
  if (affine) {
    lin_h = inst.h->prox_linear_part(d, gamma);
    cnt.prox_h += 1;
  }
  auto trial_eval = [&](double alpha) {
    Vec x = s + alpha * d;
    Vec u;
    if (affine) {
      u = eval0.u + alpha * lin_h;
    } else {
      u = inst.h->prox_at(x, gamma);
      cnt.prox_h += 1;
    }
    Vec v = inst.g->prox_at(x, gamma);
    cnt.prox_g += 1;
    cnt.value_h += 1;
    cnt.value_g += 1;
    return envelope_from_proxes(inst, gamma, std::move(x), std::move(u), std::move(v));
  };

  LineSearchResult out;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double alpha = 1.0;
  std::optional<LineSearchResult> best;
  for (int trial = 0; trial < opts.max_backtracks; ++trial) {
    EnvelopeEval e = trial_eval(alpha);
    out.trials = trial + 1;
    const bool armijo = std::isfinite(e.env) && e.env <= eval0.env + opts.c1 * alpha * slope && e.env < eval0.env;
    if (!armijo) {
      hi = alpha;
    } else if (e.grad.dot(d) < opts.c2 * slope) {
      lo = alpha;
      best = LineSearchResult{alpha, e, trial + 1, false, false};
    } else {
      out.alpha = alpha;
      out.eval = std::move(e);
      out.wolfe = true;
      return out;
    }
    alpha = std::isinf(hi) ? 2.0 * alpha : 0.5 * (lo + hi);
  }
  if (best) {
    best->trials = out.trials;
    return *best;
  }
  // plain two-prox step from the linesearch origin
  out.fallback = true;
  out.alpha = lambda;
  out.eval = dce_eval(inst, gamma, s + lambda * (eval0.v - eval0.u));
  cnt.prox_h += 1;
  cnt.prox_g += 1;
  cnt.value_h += 1;
  cnt.value_g += 1;
  return out;
}

/// Envelope descent with L-BFGS directions and weak Wolfe steps. Every
/// accepted step strictly decreases the envelope; fallback steps satisfy the
/// plain descent inequality.
inline RunReport run_lbfgs(const DcInstance &inst, const TwoProxConfig &cfg, const Vec &s0,
                           const LbfgsOptions &opts = {}) {
  validate(cfg, inst.mu);
  RunReport rep;
  rep.solver = "dce-lbfgs";
  if (inst.dim() == 0) {
    rep.termination = Termination::converged;
    return rep;
  }
  require_dim(s0, inst.dim(), "run_lbfgs start point");
  const double plain_weight = (2.0 - cfg.lambda / (1.0 - cfg.gamma * inst.mu)) * cfg.lambda / cfg.gamma;

  Stopwatch clock;
  CallCounts calls;
  LbfgsState state(opts.memory);
  EnvelopeEval cur;
  try {
    cur = dce_eval(inst, cfg.gamma, s0);
  } catch (const NumericalError &err) {
    rep.termination = Termination::numerical_error;
    rep.message = err.what();
    return rep;
  }
  calls.prox_h += 1;
  calls.prox_g += 1;
  calls.value_h += 1;
  calls.value_g += 1;
  rep.env_initial = cur.env;
  rep.env_min = cur.env;
  double last_alpha = 0.0;
  while (true) {
    ++rep.iterations;
    if (cfg.record_trace) {
      TraceEntry t;
      t.iter = rep.iterations - 1;
      t.env = cur.env;
      t.residual = cur.residual;
      t.phi = inst.phi(cur.v);
      t.step = last_alpha;
      t.calls = calls;
      t.wall_ns = clock.elapsed_ns();
      rep.trace.push_back(t);
    }
    if (!std::isfinite(cur.env)) {
      rep.termination = Termination::numerical_error;
      rep.message = "non-finite envelope value";
      break;
    }
    if (cur.residual <= cfg.tol) {
      rep.termination = Termination::converged;
      break;
    }
    if (rep.iterations >= cfg.max_iter) {
      rep.termination = Termination::max_iter;
      break;
    }
    const Vec d = lbfgs_direction(state, cur.grad, cfg.gamma);
    LineSearchResult ls;
    try {
      ls = wolfe_linesearch(inst, cfg.gamma, cur.s, d, cur, opts, cfg.lambda, &calls);
    } catch (const NumericalError &err) {
      rep.termination = Termination::numerical_error;
      rep.message = err.what();
      break;
    }
    double bound = cur.env;
    if (ls.fallback) {
      ++rep.fallbacks;
      bound -= 0.5 * plain_weight * cur.residual * cur.residual;
    } else if (ls.alpha == 1.0) {
      ++rep.unit_steps;
    }
    const double excess = ls.eval.env - bound;
    rep.max_descent_violation = std::max(rep.max_descent_violation, excess);
    ++rep.steps;
    rep.sum_sq_residual += cur.residual * cur.residual;
    if (excess > 1e-12 * (1.0 + std::abs(cur.env))) {
      std::ostringstream msg;
      msg << "accepted step failed to decrease the envelope at iteration " << rep.iterations - 1;
      rep.termination = Termination::numerical_error;
      rep.message = msg.str();
      cur = std::move(ls.eval);
      break;
    }
    state.update(ls.eval.s - cur.s, ls.eval.grad - cur.grad);
    last_alpha = ls.alpha;
    rep.env_min = std::min(rep.env_min, ls.eval.env);
    cur = std::move(ls.eval);
  }
  rep.final_s = cur.s;
  rep.final_u = cur.u;
  rep.final_v = cur.v;
  rep.calls = calls;
  return rep;
}

}  // namespace dcenv
