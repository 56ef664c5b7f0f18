#include "support/oracles.hpp"

#include "dcenv/driver.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

using namespace dcenv;

namespace {

int failures = 0;

void report(const char *id, bool pass, const std::string &detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Vec stack(const Vec &a, const Vec &b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

// Runs collected for the descent and summability criteria.
struct RunLog {
  std::vector<RunReport> scalar;  // run(): checked against the trace
  std::vector<RunReport> weighted;  // run_diag() and run3()
  long long steps = 0;
};

void ac1() {
  std::mt19937_64 eng(101);
  double worst_env = 0.0;
  int points = 0;
  for (const auto &syn : synthetic_catalogue()) {
    const DcInstance &dc = syn.dc();
    for (int k = 0; k < 20; ++k) {
      const Vec s = oracle::random_vec(eng, dc.dim(), 2.0);
      const EnvelopeEval e = dce_eval(dc, syn.gamma, s);
      const Vec fd = oracle::fd_gradient([&](const Vec &x) { return dce_eval(dc, syn.gamma, x).env; }, s);
      worst_env = std::max(worst_env, (fd - e.grad).norm() / (1.0 + e.grad.norm()));
      ++points;
    }
  }
  double worst_psi = 0.0;
  const ThreeProxConfig cfg;
  const ThreeTermInstance d = *find_synthetic("d")->three;
  for (int k = 0; k < 20; ++k) {
    const Vec s = oracle::random_vec(eng, 1, 2.0), t = oracle::random_vec(eng, 1, 2.0);
    worst_psi = std::max(worst_psi, psi_gradient_identity_check(d, cfg, s, t));
  }
  const SpcaProblem p = make_spca(15, std::nullopt, 1);
  const ThreeTermInstance spca3 = make_spca3(p);
  Rng rng(1, 15, kStreamTests);
  for (int k = 0; k < 20; ++k) {
    const Vec s = rng.normal_vector(15) * 0.5, t = rng.normal_vector(15) * 0.5;
    worst_psi = std::max(worst_psi, psi_gradient_identity_check(spca3, cfg, s, t));
  }
  report("AC1", worst_env <= 1e-5 && worst_psi <= 1e-4,
         "envelope gradient max rel err " + num(worst_env) + " over " + std::to_string(points) +
             " points; Psi identity max err " + num(worst_psi));
}

RunLog collect_runs() {
  RunLog log;
  std::mt19937_64 eng(202);
  std::uniform_real_distribution<double> relax(0.1, 1.9);
  // catalogue instances, several relaxations and starts
  for (const auto &syn : synthetic_catalogue()) {
    for (int k = 0; k < 10; ++k) {
      TwoProxConfig cfg;
      cfg.gamma = syn.gamma;
      cfg.lambda = syn.dc().mu > 0.0 ? syn.lambda : relax(eng);
      cfg.tol = 1e-10;
      cfg.max_iter = 2000;
      log.scalar.push_back(run(syn.dc(), cfg, oracle::random_vec(eng, syn.dc().dim(), 3.0)));
    }
  }
  // SPCA instances
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const SpcaProblem p = make_spca(30, std::nullopt, seed);
    TwoProxConfig cfg;
    cfg.gamma = 0.9 / p.data.lambda_max;
    cfg.lambda = relax(eng);
    cfg.max_iter = 2000;
    const Vec x0 = p.start_point();
    log.scalar.push_back(run(p.dc, cfg, x0 + cfg.gamma * p.quadratic->gradient(x0)));
  }
  // lifted three-term instance with a non-uniform metric
  const ThreeTermInstance d = *find_synthetic("d")->three;
  auto G = std::make_shared<oracle::LiftedG>(d.g, d.f, [](const Vec &y) { return 0.5 * y.squaredNorm(); });
  auto H = std::make_shared<oracle::LiftedH>(d.h);
  const DcInstance lift = make_dc_instance(G, H, 1.0);
  for (auto [gamma, delta, lambda, mu] : {std::array<double, 4>{0.5, 2.0, 0.45, 0.45},
                                          std::array<double, 4>{0.3, 4.0, 1.2, 0.6}}) {
    DiagConfig cfg{DiagonalStepsize((Vec(2) << gamma, 1.0 / delta).finished()),
                   DiagonalStepsize((Vec(2) << lambda, mu).finished()), Vec::Ones(2)};
    cfg.tol = 1e-12;
    cfg.max_iter = 2000;
    log.weighted.push_back(run_diag(lift, cfg, stack(oracle::random_vec(eng, 1, 2.0), oracle::random_vec(eng, 1))));
  }
  // three-prox on SPCA
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SpcaProblem p = make_spca(20, std::nullopt, seed);
    ThreeProxConfig cfg;
    cfg.max_iter = 1500;
    const Vec x0 = p.start_point();
    log.weighted.push_back(run3(make_spca3(p), cfg, x0, x0));
  }
  for (const auto &r : log.scalar) log.steps += r.steps;
  for (const auto &r : log.weighted) log.steps += r.steps;
  return log;
}

void ac2(const RunLog &log) {
  double worst = 0.0;
  bool ok = true;
  for (const auto &r : log.scalar) {
    ok = ok && r.termination != Termination::numerical_error;
    // recheck from the recorded trace
    for (int k = 0; k + 1 < static_cast<int>(r.trace.size()) && k < r.steps; ++k) {
      const double rk = r.trace[k].residual;
      const double bound = r.trace[k].env - 0.5 * r.descent_weight * rk * rk;
      const double excess = (r.trace[k + 1].env - bound) / (1.0 + std::abs(r.trace[k].env));
      worst = std::max(worst, excess);
    }
  }
  for (const auto &r : log.weighted) {
    ok = ok && r.termination != Termination::numerical_error;
    worst = std::max(worst, r.max_descent_violation / (1.0 + std::abs(r.env_initial)));
  }
  ok = ok && worst <= 1e-12 && log.steps >= 10000;
  report("AC2", ok,
         std::to_string(log.steps) + " iterations over " + std::to_string(log.scalar.size() + log.weighted.size()) +
             " runs; worst relative excess " + num(worst));
}

void ac3(const RunLog &log) {
  bool ok = true;
  double worst = -kInf;
  for (const auto &r : log.scalar) {
    double sum = 0.0, lowest = r.trace.front().env;
    for (int k = 0; k < r.steps; ++k) sum += r.trace[k].residual * r.trace[k].residual;
    for (const auto &e : r.trace) lowest = std::min(lowest, e.env);
    const double bound = 2.0 * (r.trace.front().env - lowest) / r.descent_weight;
    worst = std::max(worst, (sum - bound) / (1.0 + bound));
    ok = ok && sum <= bound * (1.0 + 1e-10) + 1e-10 && residual_rate_check(r);
  }
  for (const auto &r : log.weighted) ok = ok && residual_rate_check(r);
  report("AC3", ok, "worst (sum r^2 - bound)/(1 + bound) " + num(worst));
}

void ac4() {
  double worst = 0.0;
  int points = 0;
  for (const auto name : {"a", "b", "d"}) {
    const auto syn = *find_synthetic(name);
    const auto &h = syn.smooth.smooth_h();
    const NegativeSmooth f(syn.dc().smooth_h);
    const double gamma = 0.9 / std::max(h.lipschitz(), 1.0);
    std::mt19937_64 eng(404);
    std::vector<Vec> pts;
    for (int k = 0; k < 100; ++k) pts.push_back(oracle::random_vec(eng, 1, 3.0));
    worst = std::max(worst, dce_fbe_equivalence_check(f, syn.dc().g, syn.dc().h, gamma, pts).max_rel);
    points += 100;
  }
  const SpcaProblem p = make_spca(50, std::nullopt, 4);
  const NegativeSmooth f(p.quadratic);
  std::vector<Vec> pts;
  Rng rng(4, 50, kStreamTests);
  for (int k = 0; k < 100; ++k) pts.push_back(rng.normal_vector(50) * 2.0);
  worst = std::max(worst, dce_fbe_equivalence_check(f, p.dc.g, p.dc.h, 0.9 / p.data.lambda_max, pts).max_rel);
  points += 100;
  report("AC4", worst <= 1e-8, "max |env - FBE|/(1 + |env|) " + num(worst) + " over " + std::to_string(points) + " points");
}

void ac5() {
  const ThreeTermInstance d = *find_synthetic("d")->three;
  auto G = std::make_shared<oracle::LiftedG>(d.g, d.f, [](const Vec &y) { return 0.5 * y.squaredNorm(); });
  auto H = std::make_shared<oracle::LiftedH>(d.h);
  const DcInstance lift = make_dc_instance(G, H, 1.0);
  double worst = 0.0;
  for (auto [gamma, delta, lambda, mu] : {std::array<double, 4>{0.5, 2.0, 0.45, 0.45},
                                          std::array<double, 4>{0.3, 4.0, 1.2, 0.6}}) {
    ThreeProxConfig cfg{gamma, delta, lambda, mu, 0.0, 1, false};
    DiagConfig dc{DiagonalStepsize((Vec(2) << gamma, 1.0 / delta).finished()),
                  DiagonalStepsize((Vec(2) << lambda, mu).finished()), Vec::Ones(2)};
    dc.tol = 0.0;
    dc.record_trace = false;
    const Vec s0 = Vec::Constant(1, 1.3), t0 = Vec::Constant(1, -0.7);
    for (int k = 1; k <= 100; ++k) {
      cfg.max_iter = k;
      dc.max_iter = k;
      const RunReport a = run3(d, cfg, s0, t0);
      const RunReport b = run_diag(lift, dc, stack(s0, t0 / delta));
      worst = std::max({worst, std::abs(a.final_s[0] - b.final_s[0]), std::abs(a.final_t[0] / delta - b.final_s[1])});
    }
  }
  report("AC5", worst <= 1e-12, "max s-trace deviation over 100 iterations " + num(worst));
}

void ac6() {
  bool ok = true;
  double worst = 0.0;
  int runs = 0;
  for (const auto &syn : synthetic_catalogue()) {
    const GridMinimum grid =
        grid_minimize([&](const Vec &x) { return syn.dc().phi(x); }, syn.dc().dim(), syn.grid_lo, syn.grid_hi);
    ok = ok && (grid.argmin - syn.stationary).lpNorm<Eigen::Infinity>() <= 1e-4;
    const BuiltProblem prob = build_problem(ProblemSpec{syn.name, 0, 0, {}, {}});
    for (const auto name : kSolverNames) {
      const std::string solver(name);
      if (solver == "three-prox" && !syn.three) continue;
      const RunReport rep = solve_problem(prob, solver, SolveOptions{});
      const Vec &x = rep.final_v;
      const double err = (x - syn.stationary).lpNorm<Eigen::Infinity>();
      worst = std::max(worst, err);
      ok = ok && rep.converged() && err <= 1e-4;
      ++runs;
    }
  }
  report("AC6", ok, std::to_string(runs) + " runs; max distance to the stored stationary point " + num(worst));
}

void ac7() {
  const std::vector<std::string> solvers = {"dce", "dce-lbfgs", "fbs", "dca", "drs"};
  std::map<std::string, std::vector<int>> iters;
  std::map<std::string, bool> converged;
  for (const auto &s : solvers) converged[s] = true;
  SolveOptions opts;
  opts.record_trace = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BuiltProblem prob = build_problem(ProblemSpec{"spca", 100, seed, {}, {}});
    for (const auto &s : solvers) {
      const RunReport rep = solve_problem(prob, s, opts);
      iters[s].push_back(rep.iterations);
      converged[s] = converged[s] && rep.converged();
    }
  }
  auto mean = [&](const std::string &s) {
    double m = 0.0;
    for (int v : iters[s]) m += v;
    return m / static_cast<double>(iters[s].size());
  };
  auto list = [&](const std::string &s) {
    std::string out;
    for (int v : iters[s]) out += (out.empty() ? "" : ",") + std::to_string(v);
    return out;
  };
  for (const auto &s : solvers)
    std::printf("  %-10s iterations [%s] mean %.1f %s\n", s.c_str(), list(s).c_str(), mean(s),
                converged[s] ? "" : "(not all converged)");

  const int dce_min = *std::min_element(iters["dce"].begin(), iters["dce"].end());
  report("AC7a", dce_min > 1000, "plain dce minimum over seeds " + std::to_string(dce_min) + " (needs > 1000)");

  const int lb_max = *std::max_element(iters["dce-lbfgs"].begin(), iters["dce-lbfgs"].end());
  report("AC7b", converged["dce-lbfgs"] && lb_max <= 1000,
         "dce-lbfgs maximum over seeds " + std::to_string(lb_max));

  const double lb = mean("dce-lbfgs");
  double best = kInf;
  bool strict = true;
  for (const auto s : {"fbs", "dca", "drs"}) {
    best = std::min(best, mean(s));
    strict = strict && lb < mean(s);
  }
  report("AC7c", lb <= 2.0 * best,
         "dce-lbfgs mean " + num(lb) + ", best baseline mean " + num(best) +
             (strict ? "; strictly below every baseline" : "; strict ordering does not hold"));
}

void ac8() {
  std::mt19937_64 eng(808);
  const Index n = 6;
  Mat b(n, n);
  for (Index i = 0; i < n; ++i) b.col(i) = oracle::random_vec(eng, n);
  auto f = std::make_shared<Quadratic>(Mat(b.transpose() * b));
  auto h = std::make_shared<NegatedSmooth>(f);
  const DcInstance inst = make_dc_instance(std::make_shared<L1BallComposite>(n, 0.2), h, h->weak_convexity());
  const double gamma = 0.5 / f->lipschitz();
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec a = oracle::random_vec(eng, n, 2.0);
    const Vec c = oracle::random_vec(eng, n, 2.0);
    const double mid = dce_eval(inst, gamma, 0.5 * (a + c)).env;
    worst = std::max(worst, mid - 0.5 * (dce_eval(inst, gamma, a).env + dce_eval(inst, gamma, c).env));
  }
  report("AC8", worst <= 1e-10, "max midpoint violation over 1000 pairs " + num(worst));
}

template <class F>
bool rejects(F &&f) {
  try {
    f();
  } catch (const ParameterError &) {
    return true;
  }
  return false;
}

template <class F>
bool accepts(F &&f) {
  try {
    f();
  } catch (const ParameterError &) {
    return false;
  }
  return true;
}

void ac9() {
  int checked = 0, passed = 0;
  auto expect = [&](bool ok) {
    ++checked;
    passed += ok ? 1 : 0;
  };
  TwoProxConfig two;
  two.lambda = 2.0;
  expect(rejects([&] { validate(two); }));
  two.lambda = 0.0;
  expect(rejects([&] { validate(two); }));
  two.lambda = 1.99;
  expect(accepts([&] { validate(two); }));
  two.lambda = 1.0;
  two.gamma = 2.0;
  expect(rejects([&] { validate(two, 0.5); }));
  two.gamma = 1.0;
  two.lambda = 1.0;
  expect(rejects([&] { validate(two, 0.5); }));
  two.lambda = 0.99;
  expect(accepts([&] { validate(two, 0.5); }));

  ThreeProxConfig three;
  expect(accepts([&] { validate(three); }));
  three.gamma = 1.0;
  expect(rejects([&] { validate(three); }));
  three = ThreeProxConfig{};
  three.delta = 1.0;
  expect(rejects([&] { validate(three); }));
  three = ThreeProxConfig{};
  three.lambda = 2.0 * (1.0 - three.gamma);
  expect(rejects([&] { validate(three); }));
  three = ThreeProxConfig{};
  three.mu = 2.0 * (1.0 - 1.0 / three.delta);
  expect(rejects([&] { validate(three); }));
  three.mu = 0.99 * 2.0 * (1.0 - 1.0 / three.delta);
  expect(accepts([&] { validate(three); }));

  const Vec gam = (Vec(2) << 0.5, 0.25).finished();
  const Vec m = Vec::Ones(2);
  const Vec cap = 2.0 * (Vec::Ones(2) - gam.cwiseProduct(m));
  DiagConfig diag{DiagonalStepsize(gam), DiagonalStepsize(cap), m};
  expect(rejects([&] { validate(diag, 2); }));
  diag.lambda = DiagonalStepsize(Vec(0.999 * cap));
  expect(accepts([&] { validate(diag, 2); }));
  diag.lambda = DiagonalStepsize((Vec(2) << 0.5 * cap[0], cap[1]).finished());
  expect(rejects([&] { validate(diag, 2); }));
  diag.gamma = DiagonalStepsize((Vec(2) << 1.0, 0.25).finished());
  diag.lambda = DiagonalStepsize(Vec::Constant(2, 0.1));
  expect(rejects([&] { validate(diag, 2); }));

  const auto b = *find_synthetic("b");
  expect(rejects([&] { fbs_run(b.smooth, 1.0 / b.smooth.smooth_h().lipschitz(), 1e-6, 10, b.start); }));
  expect(accepts([&] { fbs_run(b.smooth, 0.99 / b.smooth.smooth_h().lipschitz(), 1e-6, 10, b.start); }));
  expect(rejects([&] { drs_run(b.smooth, 1.0 / b.smooth.smooth_h().lipschitz(), 1e-6, 10, b.start); }));
  expect(accepts([&] { drs_run(b.smooth, 0.99 / b.smooth.smooth_h().lipschitz(), 1e-6, 10, b.start); }));

  report("AC9", passed == checked, std::to_string(passed) + "/" + std::to_string(checked) + " gate checks");
}

}  // namespace

int main() {
  ac1();
  const RunLog log = collect_runs();
  ac2(log);
  ac3(log);
  ac4();
  ac5();
  ac6();
  ac7();
  ac8();
  ac9();
  std::printf("%d criterion line(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
