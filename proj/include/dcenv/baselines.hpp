#pragma once

#include "dcenv/envelope.hpp"
#include "dcenv/report.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace dcenv {

/// argmin_x g(x) - <v, x>, the DCA subproblem.
using DcaSubproblem = std::function<Vec(const Vec &)>;

/// A DC instance whose h is smooth (gradient oracle in dc.smooth_h).
struct SmoothDcInstance {
  DcInstance dc;
  DcaSubproblem dca_subproblem;  // optional

  const SmoothFunction &smooth_h() const { return *dc.smooth_h; }
};

/// Checks |grad h(a) - grad h(b)| <= L_h |a - b| on random pairs.
inline bool lipschitz_holds(const SmoothFunction &h, int pairs, std::uint64_t seed, double scale = 3.0) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(-scale, scale);
  const double lip = h.lipschitz();
  for (int k = 0; k < pairs; ++k) {
    Vec a(h.dim()), b(h.dim());
    for (Index i = 0; i < h.dim(); ++i) {
      a[i] = unif(eng);
      b[i] = unif(eng);
    }
    const double lhs = (h.gradient(a) - h.gradient(b)).norm();
    if (lhs > lip * (a - b).norm() * (1.0 + 1e-10) + 1e-12) return false;
  }
  return true;
}

inline SmoothDcInstance make_smooth_dc_instance(DcInstance dc, DcaSubproblem dca = {}) {
  require(dc.smooth_h != nullptr, "SmoothDcInstance: h needs a gradient oracle");
  require(dc.smooth_h->lipschitz() >= 0.0, "SmoothDcInstance: L_h must be >= 0");
  if (!lipschitz_holds(*dc.smooth_h, 16, 0x5eed))
    throw ParameterError("SmoothDcInstance: grad h violates its Lipschitz constant");
  return SmoothDcInstance{std::move(dc), std::move(dca)};
}

namespace detail {

inline void record_baseline(RunReport &rep, bool record, double objective, double residual, const CallCounts &calls,
                            const Stopwatch &clock) {
  ++rep.iterations;
  if (!record) return;
  TraceEntry t;
  t.iter = rep.iterations - 1;
  t.env = objective;
  t.residual = residual;
  t.phi = objective;
  t.step = rep.iterations > 1 ? 1.0 : 0.0;
  t.calls = calls;
  t.wall_ns = clock.elapsed_ns();
  rep.trace.push_back(t);
}

inline bool baseline_done(RunReport &rep, double residual, double tol, int max_iter) {
  if (!std::isfinite(residual)) {
    rep.termination = Termination::numerical_error;
    rep.message = "non-finite residual";
    return true;
  }
  if (residual <= tol) {
    rep.termination = Termination::converged;
    return true;
  }
  if (rep.iterations >= max_iter) {
    rep.termination = Termination::max_iter;
    return true;
  }
  return false;
}

}  // namespace detail

/// Forward-backward splitting u+ = prox_{gamma g}(u + gamma grad h(u)).
///
/// The shared residual |prox_{gamma h}(s) - prox_{gamma g}(s)| is taken at the
/// forward point s = u + gamma grad h(u), where prox_{gamma h}(s) = u exactly,
/// so it equals |u - u+| and costs no extra prox.
inline RunReport fbs_run(const SmoothDcInstance &inst, double gamma, double tol, int max_iter, const Vec &u0,
                         bool record_trace = true) {
  require_positive(gamma, "FBS stepsize");
  const double lip = inst.smooth_h().lipschitz();
  if (lip > 0.0 && !(gamma * lip < 1.0)) throw ParameterError("FBS needs gamma < 1/L_h");
  require(max_iter >= 1, "max_iter must be >= 1");
  RunReport rep;
  rep.solver = "fbs";
  if (inst.dc.dim() == 0) {
    rep.termination = Termination::converged;
    return rep;
  }
  require_dim(u0, inst.dc.dim(), "FBS start point");
  Stopwatch clock;
  CallCounts calls;
  Vec u = u0;
  Vec fwd, v;
  while (true) {
    fwd = u + gamma * inst.smooth_h().gradient(u);
    v = inst.dc.g->prox_at(fwd, gamma);
    calls.grad_h += 1;
    calls.prox_g += 1;
    const double residual = (u - v).norm();
    detail::record_baseline(rep, record_trace, inst.dc.phi(v), residual, calls, clock);
    if (detail::baseline_done(rep, residual, tol, max_iter)) break;
    u = v;
    ++rep.steps;
  }
  rep.final_s = fwd;
  rep.final_u = u;
  rep.final_v = v;
  rep.calls = calls;
  return rep;
}

/// DCA: w = grad h(u), u+ = argmin_x g(x) - <w, x>.
///
/// gamma only enters the shared residual, evaluated at u + gamma grad h(u);
/// that monitoring prox is not charged to the call counts.
inline RunReport dca_run(const SmoothDcInstance &inst, double gamma, double tol, int max_iter, const Vec &u0,
                         bool record_trace = true) {
  if (!inst.dca_subproblem) throw CapabilityError("DCA needs a subproblem solver argmin g - <v, .>");
  require_positive(gamma, "DCA residual stepsize");
  require(max_iter >= 1, "max_iter must be >= 1");
  RunReport rep;
  rep.solver = "dca";
  if (inst.dc.dim() == 0) {
    rep.termination = Termination::converged;
    return rep;
  }
  require_dim(u0, inst.dc.dim(), "DCA start point");
  Stopwatch clock;
  CallCounts calls;
  Vec u = u0;
  Vec s;
  while (true) {
    const Vec grad = inst.smooth_h().gradient(u);
    calls.grad_h += 1;
    s = u + gamma * grad;
    const double residual = (u - inst.dc.g->prox_at(s, gamma)).norm();
    detail::record_baseline(rep, record_trace, inst.dc.phi(u), residual, calls, clock);
    if (detail::baseline_done(rep, residual, tol, max_iter)) break;
    u = inst.dca_subproblem(grad);
    calls.prox_g += 1;
    ++rep.steps;
  }
  rep.final_s = s;
  rep.final_u = u;
  rep.final_v = u;
  rep.calls = calls;
  return rep;
}

/// Douglas-Rachford on phi = (-h) + g with the smooth term first:
/// u = prox_{-gamma h}(s), w = prox_{gamma g}(2u - s), s+ = s + (w - u).
///
/// The shared residual is taken at 2u - s = u + gamma grad h(u), whose
/// prox_{gamma h} is u and whose prox_{gamma g} is w; hence it is |u - w|.
inline RunReport drs_run(const SmoothDcInstance &inst, double gamma, double tol, int max_iter, const Vec &s0,
                         bool record_trace = true) {
  require_positive(gamma, "DRS stepsize");
  if (!(gamma < inst.smooth_h().backward_step_limit()))
    throw ParameterError("DRS needs gamma below the backward-prox limit of h (gamma lambda_max < 1)");
  require(max_iter >= 1, "max_iter must be >= 1");
  RunReport rep;
  rep.solver = "drs";
  if (inst.dc.dim() == 0) {
    rep.termination = Termination::converged;
    return rep;
  }
  require_dim(s0, inst.dc.dim(), "DRS start point");
  Stopwatch clock;
  CallCounts calls;
  Vec s = s0;
  Vec u, w;
  while (true) {
    try {
      u = inst.smooth_h().backward_prox(s, gamma);
    } catch (const NumericalError &err) {
      rep.termination = Termination::numerical_error;
      rep.message = err.what();
      break;
    }
    w = inst.dc.g->prox_at(2.0 * u - s, gamma);
    calls.prox_h += 1;
    calls.prox_g += 1;
    const double residual = (u - w).norm();
    detail::record_baseline(rep, record_trace, inst.dc.phi(w), residual, calls, clock);
    if (detail::baseline_done(rep, residual, tol, max_iter)) break;
    s += w - u;
    ++rep.steps;
  }
  rep.final_s = s;
  rep.final_u = u;
  rep.final_v = w;
  rep.calls = calls;
  return rep;
}

}  // namespace dcenv
