#pragma once

#include "dcenv/core.hpp"

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace dcenv {

enum class Termination { converged, max_iter, numerical_error };

inline const char *to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::numerical_error: return "numerical_error";
  }
  return "unknown";
}

/// Cumulative oracle calls.
struct CallCounts {
  std::int64_t prox_h = 0;
  std::int64_t prox_g = 0;
  std::int64_t prox_f = 0;
  std::int64_t grad_h = 0;
  std::int64_t value_h = 0;
  std::int64_t value_g = 0;
  std::int64_t value_f = 0;
};

struct TraceEntry {
  int iter = 0;
  double env = 0.0;       // envelope (or objective for the baselines)
  double residual = 0.0;  // termination residual at this iterate
  double phi = 0.0;       // cost at the primal point
  double step = 0.0;      // step length that produced this iterate (0 for the first)
  CallCounts calls;
  std::int64_t wall_ns = 0;
};

struct RunReport {
  std::string solver;
  int iterations = 0;  // residual evaluations, i.e. trace length
  Termination termination = Termination::max_iter;
  std::string message;
  Vec final_s, final_u, final_v;
  Vec final_t, final_z;  // three-prox only
  std::vector<TraceEntry> trace;
  CallCounts calls;

  // Telescoping bookkeeping for the summability check: the run guarantees
  // env(s+) <= env(s) - (descent_weight/2) r^2 for the residual r.
  double descent_weight = 0.0;
  double env_initial = 0.0;
  double env_min = 0.0;
  double sum_sq_residual = 0.0;  // over every step taken
  double max_descent_violation = 0.0;  // max(0, observed - guaranteed) over steps
  int steps = 0;

  // Linesearch statistics (accelerated runs only).
  int unit_steps = 0;  // trial step 1 accepted
  int fallbacks = 0;   // plain two-prox steps taken after a failed linesearch

  double final_residual() const { return trace.empty() ? kInf : trace.back().residual; }
  bool converged() const { return termination == Termination::converged; }
};

/// Steady clock helper for the wall_ns trace column.
class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t elapsed_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

/// Summability consequence of the descent inequality:
/// sum r_k^2 <= 2 (env_0 - min env) / descent_weight, plus that
/// k min_{i<=k} r_i^2 never exceeds the partial sums.
inline bool residual_rate_check(const RunReport &report, double rel_tol = 1e-10) {
  if (report.descent_weight <= 0.0) return false;
  const double gap = report.env_initial - report.env_min;
  const double bound = 2.0 * gap / report.descent_weight;
  const double slack = rel_tol * (1.0 + std::abs(bound)) +
                       2.0 * report.steps * 1e-12 * (1.0 + std::abs(report.env_initial)) / report.descent_weight;
  if (!(report.sum_sq_residual <= bound + slack)) return false;

  double partial = 0.0;
  double running_min = kInf;
  const int steps = std::min<int>(report.steps, static_cast<int>(report.trace.size()));
  for (int k = 0; k < steps; ++k) {
    const double r2 = report.trace[k].residual * report.trace[k].residual;
    partial += r2;
    running_min = std::min(running_min, r2);
    if ((k + 1) * running_min > partial * (1.0 + 1e-12) + 1e-300) return false;
  }
  return true;
}

}  // namespace dcenv
