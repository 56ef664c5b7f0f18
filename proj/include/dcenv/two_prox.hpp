#pragma once

#include "dcenv/envelope.hpp"
#include "dcenv/report.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

namespace dcenv {

/// Scalar stepsize gamma and relaxation lambda for gradient descent on the
/// envelope, s+ = s + lambda (v - u).
struct TwoProxConfig {
  double gamma = 1.0;
  double lambda = 1.0;
  double tol = 1e-6;
  int max_iter = 10000;
  bool record_trace = true;
};

/// Admissible box: gamma > 0, gamma mu < 1, 0 < lambda < 2 (1 - gamma mu).
inline void validate(const TwoProxConfig &cfg, double mu = 0.0) {
  require_positive(cfg.gamma, "gamma");
  require(cfg.gamma * mu < 1.0, "gamma * mu must be < 1");
  const double cap = 2.0 * (1.0 - cfg.gamma * mu);
  require(cfg.lambda > 0.0 && cfg.lambda < cap, "lambda must lie in (0, 2(1 - gamma mu))");
  require(cfg.tol >= 0.0, "tol must be >= 0");
  require(cfg.max_iter >= 1, "max_iter must be >= 1");
}

/// Diagonal stepsize Gamma, diagonal relaxation Lambda and a diagonal shift M
/// such that g + <., M .>/2 and h + <., M .>/2 are convex.
struct DiagConfig {
  DiagonalStepsize gamma;
  DiagonalStepsize lambda;
  Vec shift;  // M; empty means zero
  double tol = 1e-6;
  int max_iter = 10000;
  bool record_trace = true;
};

/// 0 < Lambda < 2 (I - Gamma M) elementwise, with I - Gamma M > 0.
inline void validate(const DiagConfig &cfg, Index n) {
  require(cfg.gamma.size() == n && cfg.lambda.size() == n, "DiagConfig: Gamma/Lambda dimension mismatch");
  require(cfg.shift.size() == 0 || cfg.shift.size() == n, "DiagConfig: M dimension mismatch");
  for (Index i = 0; i < n; ++i) {
    const double m = cfg.shift.size() ? cfg.shift[i] : 0.0;
    const double room = 1.0 - cfg.gamma[i] * m;
    require(room > 0.0, "DiagConfig: I - Gamma M must be positive");
    require(cfg.lambda[i] < 2.0 * room, "DiagConfig: Lambda must satisfy Lambda < 2(I - Gamma M)");
  }
  require(cfg.tol >= 0.0, "tol must be >= 0");
  require(cfg.max_iter >= 1, "max_iter must be >= 1");
}

namespace detail {

/// Stepsize, relaxation and descent weights of one gradient scheme. The
/// uniform case keeps scalars so that Gamma = gamma I reproduces the scalar
/// recursion bit for bit.
struct StepMetric {
  bool uniform = true;
  double gamma = 1.0;
  double lambda = 1.0;
  double weight = 0.0;
  Vec gammas, lambdas, weights;

  static StepMetric scalar(double gamma, double lambda, double shift) {
    StepMetric m;
    m.gamma = gamma;
    m.lambda = lambda;
    m.weight = (2.0 - lambda / (1.0 - gamma * shift)) * lambda / gamma;
    return m;
  }

  static StepMetric diagonal(const DiagConfig &cfg) {
    const Index n = cfg.gamma.size();
    const bool zero_or_uniform_shift =
        cfg.shift.size() == 0 || (cfg.shift.array() == cfg.shift[0]).all();
    if (n > 0 && cfg.gamma.is_uniform() && cfg.lambda.is_uniform() && zero_or_uniform_shift)
      return scalar(cfg.gamma[0], cfg.lambda[0], cfg.shift.size() ? cfg.shift[0] : 0.0);
    StepMetric m;
    m.uniform = false;
    m.gammas = cfg.gamma.entries();
    m.lambdas = cfg.lambda.entries();
    m.weights.resize(n);
    for (Index i = 0; i < n; ++i) {
      const double shift = cfg.shift.size() ? cfg.shift[i] : 0.0;
      m.weights[i] = (2.0 - m.lambdas[i] / (1.0 - m.gammas[i] * shift)) * m.lambdas[i] / m.gammas[i];
    }
    m.weight = n ? m.weights.minCoeff() : 0.0;
    return m;
  }

  Vec prox(const ProxFunction &f, const Vec &s) const {
    if (uniform) return f.prox_at(s, gamma);
    return f.prox_diagonal_at(s, DiagonalStepsize(gammas));
  }

  /// |d|^2_{Gamma^{-1}} / 2
  double half_norm(const Vec &d) const {
    if (uniform) return d.squaredNorm() / (2.0 * gamma);
    return 0.5 * (d.array().square() / gammas.array()).sum();
  }

  Vec step(const Vec &s, const Vec &u, const Vec &v) const {
    if (uniform) return s + lambda * (v - u);
    return s + (lambdas.array() * (v - u).array()).matrix();
  }

  /// Guaranteed decrease |u - v|^2_W / 2.
  double decrease(const Vec &u, const Vec &v) const {
    if (uniform) return 0.5 * weight * (u - v).squaredNorm();
    return 0.5 * (weights.array() * (u - v).array().square()).sum();
  }
};

struct MetricEval {
  Vec s, u, v;
  double env = 0.0;
  double residual = 0.0;
};

inline MetricEval metric_eval(const DcInstance &inst, const StepMetric &m, const Vec &s, CallCounts &calls) {
  MetricEval e;
  e.u = m.prox(*inst.h, s);
  e.v = m.prox(*inst.g, s);
  calls.prox_h += 1;
  calls.prox_g += 1;
  calls.value_h += 1;
  calls.value_g += 1;
  e.env = dc_difference(inst.g->value(e.v) + m.half_norm(e.v - s), inst.h->value(e.u) + m.half_norm(e.u - s));
  e.residual = (e.u - e.v).norm();
  e.s = s;
  return e;
}

inline RunReport run_metric(const DcInstance &inst, const StepMetric &metric, double tol, int max_iter,
                            bool record_trace, const Vec &s0, std::string solver) {
  RunReport rep;
  rep.solver = std::move(solver);
  rep.descent_weight = metric.weight;
  if (inst.dim() == 0) {
    rep.termination = Termination::converged;
    return rep;
  }
  require_dim(s0, inst.dim(), "solver start point");
  Stopwatch clock;
  CallCounts calls;
  MetricEval cur;
  try {
    cur = metric_eval(inst, metric, s0, calls);
  } catch (const NumericalError &err) {
    rep.termination = Termination::numerical_error;
    rep.message = err.what();
    return rep;
  }
  rep.env_initial = cur.env;
  rep.env_min = cur.env;
  while (true) {
    ++rep.iterations;
    if (record_trace) {
      TraceEntry t;
      t.iter = rep.iterations - 1;
      t.env = cur.env;
      t.residual = cur.residual;
      t.phi = inst.phi(cur.v);
      t.step = rep.steps > 0 ? 1.0 : 0.0;
      t.calls = calls;
      t.wall_ns = clock.elapsed_ns();
      rep.trace.push_back(t);
    }
    if (!std::isfinite(cur.env)) {
      rep.termination = Termination::numerical_error;
      rep.message = "non-finite envelope value";
      break;
    }
    if (cur.residual <= tol) {
      rep.termination = Termination::converged;
      break;
    }
    if (rep.iterations >= max_iter) {
      rep.termination = Termination::max_iter;
      break;
    }
    MetricEval next;
    try {
      next = metric_eval(inst, metric, metric.step(cur.s, cur.u, cur.v), calls);
    } catch (const NumericalError &err) {
      rep.termination = Termination::numerical_error;
      rep.message = err.what();
      break;
    }
    const double guaranteed = cur.env - metric.decrease(cur.u, cur.v);
    const double excess = next.env - guaranteed;
    rep.max_descent_violation = std::max(rep.max_descent_violation, excess);
    rep.sum_sq_residual += cur.residual * cur.residual;
    ++rep.steps;
    if (excess > 1e-12 * (1.0 + std::abs(cur.env))) {
      std::ostringstream msg;
      msg << "descent inequality violated at iteration " << rep.iterations - 1 << " by " << excess
          << " (check the hypoconvexity modulus)";
      rep.termination = Termination::numerical_error;
      rep.message = msg.str();
      cur = std::move(next);
      break;
    }
    rep.env_min = std::min(rep.env_min, next.env);
    cur = std::move(next);
  }
  rep.final_s = cur.s;
  rep.final_u = cur.u;
  rep.final_v = cur.v;
  rep.calls = calls;
  return rep;
}

}  // namespace detail

struct TwoProxStep {
  Vec s_next;
  Vec u;
  Vec v;
};

/// One iteration: u = prox_{gamma h}(s), v = prox_{gamma g}(s), s+ = s + lambda (v - u).
inline TwoProxStep two_prox_step(const DcInstance &inst, const TwoProxConfig &cfg, const Vec &s) {
  validate(cfg, inst.mu);
  require_dim(s, inst.dim(), "two_prox_step");
  TwoProxStep out;
  out.u = inst.h->prox_at(s, cfg.gamma);
  out.v = inst.g->prox_at(s, cfg.gamma);
  out.s_next = s + cfg.lambda * (out.v - out.u);
  return out;
}

/// Gradient descent on the envelope until |u - v| <= tol or max_iter residual
/// evaluations. Each step is checked against the guaranteed decrease
/// lambda (2 - lambda/(1 - gamma mu)) |u - v|^2 / (2 gamma) up to a 1e-12
/// relative slack; a violation ends the run with numerical_error.
inline RunReport run(const DcInstance &inst, const TwoProxConfig &cfg, const Vec &s0) {
  validate(cfg, inst.mu);
  return detail::run_metric(inst, detail::StepMetric::scalar(cfg.gamma, cfg.lambda, inst.mu), cfg.tol,
                            cfg.max_iter, cfg.record_trace, s0, "dce");
}

/// Diagonal-metric variant: u = prox^Gamma_h(s), v = prox^Gamma_g(s),
/// s+ = s + Lambda (v - u), descent measured in |.|^2_W with
/// W = (2I - (I - Gamma M)^{-1} Lambda) Gamma^{-1} Lambda.
inline RunReport run_diag(const DcInstance &inst, const DiagConfig &cfg, const Vec &s0) {
  validate(cfg, inst.dim());
  if (!cfg.gamma.is_uniform()) {
    if (!inst.g->supports_diagonal() || !inst.h->supports_diagonal())
      throw CapabilityError("run_diag: both g and h must support a diagonal-metric prox");
  }
  return detail::run_metric(inst, detail::StepMetric::diagonal(cfg), cfg.tol, cfg.max_iter, cfg.record_trace,
                            s0, "dce-diag");
}

}  // namespace dcenv
