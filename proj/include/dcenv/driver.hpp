#pragma once

#include "dcenv/baselines.hpp"
#include "dcenv/lbfgs.hpp"
#include "dcenv/problems.hpp"
#include "dcenv/three_prox.hpp"
#include "dcenv/two_prox.hpp"

#include <array>
#include <charconv>
#include <string>
#include <string_view>

namespace dcenv {

inline constexpr std::array<std::string_view, 6> kSolverNames = {"dce", "dce-lbfgs", "fbs", "dca", "drs", "three-prox"};

inline bool is_solver_name(std::string_view name) {
  for (auto s : kSolverNames)
    if (s == name) return true;
  return false;
}

/// Stepsize rule. "default": dce, dce-lbfgs, fbs and dca use 0.9/L, drs uses
/// 0.45/L (L = lambda_max of Sigma, or the catalogue stepsizes on synthetic
/// instances). "scaled:c": gamma = c/L for every solver. "fixed:v": gamma = v.
/// three-prox always runs with its own (gamma, delta, lambda, mu) defaults.
struct GammaPolicy {
  enum class Kind { standard, scaled, fixed } kind = Kind::standard;
  double value = 0.0;

  std::string str() const {
    switch (kind) {
      case Kind::standard: return "default";
      case Kind::scaled: return "scaled:" + format_value();
      case Kind::fixed: return "fixed:" + format_value();
    }
    return "default";
  }

  static GammaPolicy parse(const std::string &text) {
    GammaPolicy p;
    if (text.empty() || text == "default") return p;
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParameterError("gamma policy must be default, scaled:<c> or fixed:<v>");
    const std::string head = text.substr(0, colon);
    const std::string tail = text.substr(colon + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), v);
    if (ec != std::errc() || ptr != tail.data() + tail.size() || !(v > 0.0) || !std::isfinite(v))
      throw ParameterError("gamma policy value must be a positive number: " + text);
    if (head == "scaled") {
      p.kind = Kind::scaled;
    } else if (head == "fixed") {
      p.kind = Kind::fixed;
    } else {
      throw ParameterError("unknown gamma policy: " + text);
    }
    p.value = v;
    return p;
  }

private:
  std::string format_value() const {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
  }
};

/// Problem description. Matrices are regenerated from the seed.
struct ProblemSpec {
  std::string problem = "spca";  // "spca" or a synthetic catalogue name
  Index n = 100;
  std::uint64_t seed = 0;
  std::optional<double> kappa;
  GammaPolicy gamma_policy;
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 10000;
  bool record_trace = true;
};

/// A realized problem: either SPCA or a synthetic instance.
struct BuiltProblem {
  ProblemSpec spec;
  std::optional<SpcaProblem> spca;
  std::optional<SyntheticInstance> synthetic;

  const SmoothDcInstance &smooth() const { return spca ? spca->smooth : synthetic->smooth; }
  const DcInstance &dc() const { return smooth().dc; }
  Index dim() const { return dc().dim(); }
  double kappa() const { return spca ? spca->data.kappa : 0.0; }
  double lipschitz() const {
    const double l = spca ? spca->data.lambda_max : synthetic->smooth.smooth_h().lipschitz();
    return l > 0.0 ? l : 1.0;
  }
  Vec start_point() const { return spca ? spca->start_point() : synthetic->start; }

  std::optional<ThreeTermInstance> three_term() const {
    if (spca) return make_spca3(*spca);
    return synthetic->three;
  }

  double stepsize(const std::string &solver) const {
    const GammaPolicy &p = spec.gamma_policy;
    if (p.kind == GammaPolicy::Kind::fixed) return p.value;
    if (p.kind == GammaPolicy::Kind::scaled) return p.value / lipschitz();
    if (synthetic) {
      if (solver == "drs") return synthetic->gamma_drs;
      if (solver == "fbs" || solver == "dca") return synthetic->gamma_fbs;
      return synthetic->gamma;
    }
    return (solver == "drs" ? 0.45 : 0.9) / lipschitz();
  }

  double relaxation() const { return synthetic ? synthetic->lambda : 1.0; }
};

inline BuiltProblem build_problem(const ProblemSpec &spec) {
  BuiltProblem b;
  b.spec = spec;
  if (spec.problem == "spca") {
    b.spca = make_spca(spec.n, spec.kappa, spec.seed);
    return b;
  }
  b.synthetic = find_synthetic(spec.problem);
  if (!b.synthetic) throw ParameterError("unknown problem: " + spec.problem);
  b.spec.n = b.synthetic->smooth.dc.dim();
  return b;
}

/// Runs one solver from the shared primal start point x0. Envelope methods
/// start at s0 = x0 + gamma grad h(x0) (so prox_{gamma h}(s0) = x0), DRS at
/// x0 - gamma grad h(x0), FBS and DCA at x0, three-prox at s0 = t0 = x0.
inline RunReport solve_problem(const BuiltProblem &prob, const std::string &solver, const SolveOptions &opts) {
  if (!is_solver_name(solver)) throw ParameterError("unknown solver: " + solver);
  require(opts.tol > 0.0, "tol must be > 0");
  require(opts.max_iter >= 1, "max_iter must be >= 1");
  const Vec x0 = prob.start_point();
  const SmoothDcInstance &inst = prob.smooth();
  const double gamma = prob.stepsize(solver);

  if (solver == "dce" || solver == "dce-lbfgs") {
    TwoProxConfig cfg;
    cfg.gamma = gamma;
    cfg.lambda = prob.relaxation();
    cfg.tol = opts.tol;
    cfg.max_iter = opts.max_iter;
    cfg.record_trace = opts.record_trace;
    const Vec s0 = x0 + gamma * inst.smooth_h().gradient(x0);
    return solver == "dce" ? run(inst.dc, cfg, s0) : run_lbfgs(inst.dc, cfg, s0);
  }
  if (solver == "fbs") return fbs_run(inst, gamma, opts.tol, opts.max_iter, x0, opts.record_trace);
  if (solver == "dca") return dca_run(inst, gamma, opts.tol, opts.max_iter, x0, opts.record_trace);
  if (solver == "drs") {
    const Vec s0 = x0 - gamma * inst.smooth_h().gradient(x0);
    return drs_run(inst, gamma, opts.tol, opts.max_iter, s0, opts.record_trace);
  }
  const auto three = prob.three_term();
  if (!three) throw CapabilityError("problem " + prob.spec.problem + " has no three-term form");
  ThreeProxConfig cfg;
  cfg.tol = opts.tol;
  cfg.max_iter = opts.max_iter;
  cfg.record_trace = opts.record_trace;
  return run3(*three, cfg, x0, x0);
}

/// phi at the reported primal point.
inline double final_objective(const BuiltProblem &prob, const RunReport &rep) {
  if (rep.final_v.size() != prob.dim()) return kInf;
  return prob.dc().phi(rep.final_v);
}

}  // namespace dcenv
