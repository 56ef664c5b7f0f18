#pragma once

#include "dcenv/driver.hpp"

#include <json.hpp>

#include <cstdio>
#include <ostream>
#include <string>

namespace dcenv {

inline constexpr const char *kTraceHeader = "iter,env_or_objective,residual,cum_prox_h,cum_prox_g,cum_grad_h,wall_ns";
inline constexpr const char *kBenchHeader = "solver,n,mean_iters,mean_prox_h,mean_prox_g,mean_grad_h,mean_wall_ns";

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline nlohmann::json spec_to_json(const ProblemSpec &spec) {
  nlohmann::json j;
  j["problem"] = spec.problem;
  j["n"] = spec.n;
  j["seed"] = spec.seed;
  j["kappa"] = spec.kappa ? nlohmann::json(*spec.kappa) : nlohmann::json(nullptr);
  j["gamma_policy"] = spec.gamma_policy.str();
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ProblemSpec spec_from_json(const nlohmann::json &j, ProblemSpec spec = {}) {
  if (!j.is_object()) throw ParameterError("problem spec must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string &key = it.key();
    const auto &val = it.value();
    try {
      if (key == "problem") {
        spec.problem = val.get<std::string>();
      } else if (key == "n") {
        const auto n = val.get<long long>();
        require(n >= 2, "n must be >= 2");
        spec.n = static_cast<Index>(n);
      } else if (key == "seed") {
        spec.seed = val.get<std::uint64_t>();
      } else if (key == "kappa") {
        if (val.is_null()) {
          spec.kappa.reset();
        } else {
          spec.kappa = val.get<double>();
          require(*spec.kappa >= 0.0, "kappa must be >= 0");
        }
      } else if (key == "gamma_policy") {
        spec.gamma_policy = GammaPolicy::parse(val.get<std::string>());
      } else {
        throw ParameterError("unknown key in problem spec: " + key);
      }
    } catch (const nlohmann::json::exception &err) {
      throw ParameterError("bad value for '" + key + "': " + err.what());
    }
  }
  return spec;
}

inline nlohmann::json calls_to_json(const CallCounts &c) {
  return {{"prox_h", c.prox_h}, {"prox_g", c.prox_g}, {"prox_f", c.prox_f}, {"grad_h", c.grad_h},
          {"value_h", c.value_h}, {"value_g", c.value_g}, {"value_f", c.value_f}};
}

/// Summary document; non-finite numbers become null.
inline nlohmann::json summary_json(const BuiltProblem &prob, const std::string &solver, const RunReport &rep,
                                   double tol) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["solver"] = solver;
  j["problem"] = spec_to_json(prob.spec);
  j["seed"] = prob.spec.seed;
  j["n"] = prob.dim();
  j["kappa"] = prob.kappa();
  j["gamma"] = solver == "three-prox" ? num(ThreeProxConfig{}.gamma) : num(prob.stepsize(solver));
  j["tol"] = tol;
  j["termination"] = to_string(rep.termination);
  j["iterations"] = rep.iterations;
  j["final_residual"] = num(rep.final_residual());
  j["phi_final"] = num(final_objective(prob, rep));
  j["calls"] = calls_to_json(rep.calls);
  j["message"] = rep.message;
  return j;
}

inline void write_trace_csv(std::ostream &out, const RunReport &rep, bool wall_time = true) {
  out << kTraceHeader << '\n';
  for (const auto &t : rep.trace) {
    out << t.iter << ',' << format_double(t.env) << ',' << format_double(t.residual) << ',' << t.calls.prox_h << ','
        << t.calls.prox_g << ',' << t.calls.grad_h << ',' << (wall_time ? t.wall_ns : 0) << '\n';
  }
}

struct BenchRow {
  std::string solver;
  Index n = 0;
  double mean_iters = 0.0;
  double mean_prox_h = 0.0;
  double mean_prox_g = 0.0;
  double mean_grad_h = 0.0;
  double mean_wall_ns = 0.0;
};

inline void write_bench_csv(std::ostream &out, const std::vector<BenchRow> &rows) {
  out << kBenchHeader << '\n';
  for (const auto &r : rows) {
    out << r.solver << ',' << r.n << ',' << format_double(r.mean_iters) << ',' << format_double(r.mean_prox_h) << ','
        << format_double(r.mean_prox_g) << ',' << format_double(r.mean_grad_h) << ','
        << format_double(r.mean_wall_ns) << '\n';
  }
}

}  // namespace dcenv
