#pragma once

#include "dcenv/dcenv.hpp"
#include "dcenv/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace dcenv::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kExitConverged = 0, kExitError = 1, kExitMaxIter = 2 };

inline constexpr const char *kSchemaHelp =
    "Outputs:\n"
    "  trace CSV   iter,env_or_objective,residual,cum_prox_h,cum_prox_g,cum_grad_h,wall_ns\n"
    "              (env_or_objective is the envelope for dce/dce-lbfgs/three-prox and phi for the baselines;\n"
    "               cum_* are cumulative oracle calls when the row was recorded)\n"
    "  summary JSON solver, problem, seed, n, kappa, gamma, tol, termination, iterations,\n"
    "              final_residual, phi_final, calls, message\n"
    "  bench CSV   solver,n,mean_iters,mean_prox_h,mean_prox_g,mean_grad_h,mean_wall_ns\n"
    "Exit codes: 0 converged, 2 max_iter reached, 1 error.\n";

/// Flags shared by every subcommand that names a problem.
struct ProblemFlags {
  std::string config;
  std::string problem;
  long long n = 0;
  std::uint64_t seed = 0;
  double kappa = 0.0;
  std::string gamma_policy;
  CLI::Option *problem_opt = nullptr;
  CLI::Option *n_opt = nullptr;
  CLI::Option *seed_opt = nullptr;
  CLI::Option *kappa_opt = nullptr;
  CLI::Option *gamma_opt = nullptr;

  void attach(CLI::App *app) {
    app->add_option("--config", config, "JSON document with problem/run settings; flags override it");
    problem_opt = app->add_option("--problem", problem, "spca or a synthetic instance (a, b, b_hypo, c, d)");
    n_opt = app->add_option("--n", n, "SPCA dimension");
    seed_opt = app->add_option("--seed", seed, "base seed");
    kappa_opt = app->add_option("--kappa", kappa, "SPCA sparsity weight (default 0.1 max sqrt(Sigma_ii))");
    gamma_opt = app->add_option("--gamma-policy", gamma_policy, "default | scaled:<c> (gamma = c/L) | fixed:<v>");
  }

  ProblemSpec resolve(const nlohmann::json &doc) const {
    nlohmann::json problem_doc = nlohmann::json::object();
    for (const char *key : {"problem", "n", "seed", "kappa", "gamma_policy"})
      if (doc.contains(key)) problem_doc[key] = doc[key];
    ProblemSpec spec = spec_from_json(problem_doc);
    if (*problem_opt) spec.problem = problem;
    if (*n_opt) {
      require(n >= 2, "n must be >= 2");
      spec.n = static_cast<Index>(n);
    }
    if (*seed_opt) spec.seed = seed;
    if (*kappa_opt) {
      require(kappa >= 0.0, "kappa must be >= 0");
      spec.kappa = kappa;
    }
    if (*gamma_opt) spec.gamma_policy = GammaPolicy::parse(gamma_policy);
    return spec;
  }
};

inline nlohmann::json load_config(const std::string &path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &err) {
    throw ParameterError("malformed config " + path + ": " + err.what());
  }
  if (!doc.is_object()) throw ParameterError("config must be a JSON object");
  return doc;
}

template <class T>
T config_value(const nlohmann::json &doc, const char *key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception &err) {
    throw ParameterError(std::string("bad value for '") + key + "': " + err.what());
  }
}

inline void check_known_keys(const nlohmann::json &doc, std::initializer_list<const char *> extra) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char *k : {"problem", "n", "seed", "kappa", "gamma_policy"}) known = known || it.key() == k;
    for (const char *k : extra) known = known || it.key() == k;
    if (!known) throw ParameterError("unknown key in config: " + it.key());
  }
}

inline std::string run_tag(const std::string &solver, const ProblemSpec &spec, Index n) {
  std::ostringstream s;
  s << solver << '_' << spec.problem << "_n" << n << "_seed" << spec.seed;
  return s.str();
}

inline void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << text;
}

inline int exit_code(const RunReport &rep) {
  switch (rep.termination) {
    case Termination::converged: return kExitConverged;
    case Termination::max_iter: return kExitMaxIter;
    case Termination::numerical_error: return kExitError;
  }
  return kExitError;
}

struct SolveFlags {
  ProblemFlags problem;
  std::string solver = "dce";
  double tol = 1e-6;
  int max_iter = 10000;
  std::string out_dir = ".";
  bool no_wall_time = false;
  CLI::Option *solver_opt = nullptr;
  CLI::Option *tol_opt = nullptr;
  CLI::Option *max_iter_opt = nullptr;
};

inline int cmd_solve(const SolveFlags &f, std::ostream &out) {
  const nlohmann::json doc = load_config(f.problem.config);
  check_known_keys(doc, {"solver", "tol", "max_iter"});
  const ProblemSpec spec = f.problem.resolve(doc);
  SolveOptions opts;
  opts.tol = *f.tol_opt ? f.tol : config_value(doc, "tol", opts.tol);
  opts.max_iter = *f.max_iter_opt ? f.max_iter : config_value(doc, "max_iter", opts.max_iter);
  const std::string solver = *f.solver_opt ? f.solver : config_value<std::string>(doc, "solver", f.solver);
  if (!is_solver_name(solver)) throw ParameterError("unknown solver: " + solver);

  const BuiltProblem prob = build_problem(spec);
  const RunReport rep = solve_problem(prob, solver, opts);
  const nlohmann::json summary = summary_json(prob, solver, rep, opts.tol);

  fs::create_directories(f.out_dir);
  const std::string tag = run_tag(solver, prob.spec, prob.dim());
  std::ostringstream csv;
  write_trace_csv(csv, rep, !f.no_wall_time);
  write_file(fs::path(f.out_dir) / ("trace_" + tag + ".csv"), csv.str());
  write_file(fs::path(f.out_dir) / ("summary_" + tag + ".json"), summary.dump(2) + "\n");
  out << summary.dump(2) << '\n';
  return exit_code(rep);
}

struct BenchFlags {
  ProblemFlags problem;
  std::vector<std::string> solvers;
  std::vector<long long> n_values;
  int seeds = 1;
  int jobs = 1;
  double tol = 1e-6;
  int max_iter = 10000;
  bool full = false;
  bool no_wall_time = false;
  std::string out_dir = "bench_out";
  CLI::Option *solvers_opt = nullptr;
  CLI::Option *n_values_opt = nullptr;
  CLI::Option *seeds_opt = nullptr;
  CLI::Option *tol_opt = nullptr;
  CLI::Option *max_iter_opt = nullptr;
  CLI::Option *jobs_opt = nullptr;
};

/// 11 linearly spaced sizes in [100, 1000]; capped at 300 unless full.
inline std::vector<long long> default_bench_sizes(bool full) {
  std::vector<long long> out;
  for (int i = 0; i <= 10; ++i) {
    const long long n = 100 + 90 * i;
    if (full || n <= 300) out.push_back(n);
  }
  return out;
}

struct BenchRun {
  std::string solver;
  Index n = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string status;
  RunReport report;
};

inline int cmd_bench(const BenchFlags &f, std::ostream &out, std::ostream &err) {
  const nlohmann::json doc = load_config(f.problem.config);
  check_known_keys(doc, {"solvers", "n_values", "seeds", "tol", "max_iter", "jobs", "full"});
  ProblemSpec base = f.problem.resolve(doc);
  if (!*f.problem.problem_opt && !doc.contains("problem")) base.problem = "spca";

  std::vector<std::string> solvers =
      *f.solvers_opt ? f.solvers
                     : config_value<std::vector<std::string>>(doc, "solvers", {"dce", "dce-lbfgs", "fbs", "dca", "drs"});
  const bool full = f.full || config_value(doc, "full", false);
  std::vector<long long> sizes =
      *f.n_values_opt ? f.n_values : config_value<std::vector<long long>>(doc, "n_values", default_bench_sizes(full));
  const int seeds = *f.seeds_opt ? f.seeds : config_value(doc, "seeds", f.seeds);
  SolveOptions opts;
  opts.tol = *f.tol_opt ? f.tol : config_value(doc, "tol", opts.tol);
  opts.max_iter = *f.max_iter_opt ? f.max_iter : config_value(doc, "max_iter", opts.max_iter);
  const int jobs = *f.jobs_opt ? f.jobs : config_value(doc, "jobs", f.jobs);

  require(!solvers.empty(), "bench needs at least one solver");
  for (const auto &s : solvers)
    if (!is_solver_name(s)) throw ParameterError("unknown solver: " + s);
  require(!sizes.empty(), "bench needs at least one n");
  for (long long n : sizes) require(n >= 2, "n must be >= 2");
  require(seeds >= 1, "seeds must be >= 1");
  require(opts.tol > 0.0, "tol must be > 0");
  require(jobs >= 1, "jobs must be >= 1");

  std::vector<BenchRun> runs;
  for (const auto &solver : solvers)
    for (long long n : sizes)
      for (int k = 0; k < seeds; ++k) {
        BenchRun r;
        r.solver = solver;
        r.n = static_cast<Index>(n);
        r.seed = base.seed + static_cast<std::uint64_t>(k);
        runs.push_back(std::move(r));
      }

  // Workers fill disjoint slots; everything is written afterwards by this thread.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      BenchRun &r = runs[i];
      ProblemSpec spec = base;
      spec.n = r.n;
      spec.seed = r.seed;
      try {
        const BuiltProblem prob = build_problem(spec);
        r.n = prob.dim();
        r.report = solve_problem(prob, r.solver, opts);
        r.ok = r.report.termination != Termination::numerical_error;
        r.status = to_string(r.report.termination);
      } catch (const std::exception &e) {
        r.ok = false;
        r.status = std::string("error: ") + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  fs::create_directories(fs::path(f.out_dir) / "traces");
  std::vector<BenchRow> rows;
  nlohmann::json run_docs = nlohmann::json::array();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < runs.size(); i += static_cast<std::size_t>(seeds)) {
    BenchRow row;
    row.solver = runs[i].solver;
    row.n = runs[i].n;
    bool all_ok = true;
    for (int k = 0; k < seeds; ++k) {
      const BenchRun &r = runs[i + k];
      ProblemSpec spec = base;
      spec.n = r.n;
      spec.seed = r.seed;
      nlohmann::json rd = {{"solver", r.solver}, {"n", r.n}, {"seed", r.seed}, {"status", r.status}};
      if (!r.ok) {
        all_ok = false;
        ++failures;
        err << "bench: " << r.solver << " n=" << r.n << " seed=" << r.seed << " failed (" << r.status << ")\n";
        if (r.report.termination == Termination::numerical_error && !r.report.message.empty())
          rd["message"] = r.report.message;
      } else {
        const RunReport &rep = r.report;
        row.mean_iters += rep.iterations;
        row.mean_prox_h += static_cast<double>(rep.calls.prox_h);
        row.mean_prox_g += static_cast<double>(rep.calls.prox_g);
        row.mean_grad_h += static_cast<double>(rep.calls.grad_h);
        row.mean_wall_ns += f.no_wall_time || rep.trace.empty() ? 0.0 : static_cast<double>(rep.trace.back().wall_ns);
        rd["iterations"] = rep.iterations;
        rd["final_residual"] = rep.final_residual();
        const std::string tag = run_tag(r.solver, spec, r.n);
        std::ostringstream csv;
        write_trace_csv(csv, rep, !f.no_wall_time);
        write_file(fs::path(f.out_dir) / "traces" / (tag + ".csv"), csv.str());
        rd["trace"] = "traces/" + tag + ".csv";
      }
      run_docs.push_back(std::move(rd));
    }
    if (all_ok) {
      const double k = static_cast<double>(seeds);
      row.mean_iters /= k;
      row.mean_prox_h /= k;
      row.mean_prox_g /= k;
      row.mean_grad_h /= k;
      row.mean_wall_ns /= k;
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.mean_iters = row.mean_prox_h = row.mean_prox_g = row.mean_grad_h = row.mean_wall_ns = nan;
    }
    rows.push_back(row);
  }

  std::ostringstream table;
  write_bench_csv(table, rows);
  write_file(fs::path(f.out_dir) / "bench.csv", table.str());

  nlohmann::json meta;
  meta["problem"] = spec_to_json(base);
  meta["base_seed"] = base.seed;
  std::vector<std::uint64_t> seed_list;
  for (int k = 0; k < seeds; ++k) seed_list.push_back(base.seed + static_cast<std::uint64_t>(k));
  meta["seeds"] = seed_list;
  meta["solvers"] = solvers;
  meta["n_values"] = sizes;
  meta["tol"] = opts.tol;
  meta["max_iter"] = opts.max_iter;
  meta["runs"] = run_docs;
  write_file(fs::path(f.out_dir) / "bench.json", meta.dump(2) + "\n");

  out << "# seeds " << base.seed << ".." << base.seed + static_cast<std::uint64_t>(seeds) - 1 << '\n' << table.str();
  return failures == runs.size() ? kExitError : kExitConverged;
}

struct CheckFlags {
  ProblemFlags problem;
  int points = 5;
};

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::vector<CheckLine> run_checks(const BuiltProblem &prob, int points) {
  std::vector<CheckLine> lines;
  const DcInstance &dc = prob.dc();
  const double gamma = prob.stepsize("dce");
  const double lambda = prob.relaxation();
  const Vec x0 = prob.start_point();
  const Vec s_base = x0 + gamma * prob.smooth().smooth_h().gradient(x0);
  Rng rng(prob.spec.seed, static_cast<std::uint64_t>(prob.dim()), kStreamTests);
  std::vector<Vec> samples;
  for (int k = 0; k < points; ++k) samples.push_back(s_base + rng.normal_vector(prob.dim()) * (1.0 + s_base.norm()) * 0.5);

  {
    double worst = 0.0;
    for (const Vec &s : samples) {
      const EnvelopeEval e = dce_eval(dc, gamma, s);
      const double h = 1e-6 * (1.0 + s.norm());
      Vec fd(s.size());
      for (Index i = 0; i < s.size(); ++i) {
        Vec sp = s, sm = s;
        sp[i] += h;
        sm[i] -= h;
        fd[i] = (dce_eval(dc, gamma, sp).env - dce_eval(dc, gamma, sm).env) / (2.0 * h);
      }
      worst = std::max(worst, (fd - e.grad).norm() / (1.0 + e.grad.norm()));
    }
    lines.push_back({"gradient_fd", worst <= 1e-5, "max relative error " + format_double(worst)});
  }
  {
    TwoProxConfig cfg;
    cfg.gamma = gamma;
    cfg.lambda = lambda;
    cfg.tol = 0.0;
    cfg.max_iter = 51;
    const RunReport rep = run(dc, cfg, s_base);
    const bool ok = rep.termination != Termination::numerical_error;
    lines.push_back({"descent_50", ok,
                     std::to_string(rep.steps) + " steps, max excess " + format_double(rep.max_descent_violation)});
  }
  {
    double worst = 0.0;
    for (const Vec &s : samples) {
      const SandwichBounds b = sandwich_bounds(dc, gamma, s);
      const double slack = 1e-10 * (1.0 + std::abs(b.env));
      worst = std::max({worst, b.lower - b.env - slack, b.env - b.upper - slack});
    }
    lines.push_back({"sandwich", worst <= 0.0, "max violation " + format_double(std::max(0.0, worst))});
  }
  if (dc.smooth_h && gamma * dc.smooth_h->lipschitz() < 1.0) {
    const NegativeSmooth f(dc.smooth_h);
    const FbeDeviation dev = dce_fbe_equivalence_check(f, dc.g, dc.h, gamma, samples);
    lines.push_back({"fbe_equivalence", dev.max_rel <= 1e-8, "max relative deviation " + format_double(dev.max_rel)});
  }
  return lines;
}

inline int cmd_check(const CheckFlags &f, std::ostream &out) {
  const nlohmann::json doc = load_config(f.problem.config);
  check_known_keys(doc, {});
  require(f.points >= 1, "points must be >= 1");
  const BuiltProblem prob = build_problem(f.problem.resolve(doc));
  out << "# problem " << prob.spec.problem << " n=" << prob.dim() << " seed=" << prob.spec.seed << '\n';
  bool all = true;
  for (const CheckLine &l : run_checks(prob, f.points)) {
    out << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << '\n';
    all = all && l.pass;
  }
  return all ? 0 : 1;
}

inline int run_cli(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  CLI::App app{"DC envelope solvers, benchmarks and invariant checks"};
  app.footer(kSchemaHelp);
  app.require_subcommand(1);

  SolveFlags solve;
  CLI::App *solve_cmd = app.add_subcommand("solve", "solve one instance, write a trace CSV and a summary JSON");
  solve.problem.attach(solve_cmd);
  solve.solver_opt = solve_cmd->add_option("--solver", solve.solver, "dce | dce-lbfgs | fbs | dca | drs | three-prox");
  solve.tol_opt = solve_cmd->add_option("--tol", solve.tol, "residual tolerance");
  solve.max_iter_opt = solve_cmd->add_option("--max-iter", solve.max_iter, "iteration cap");
  solve_cmd->add_option("--out", solve.out_dir, "output directory");
  solve_cmd->add_flag("--no-wall-time", solve.no_wall_time, "write 0 in wall_ns columns");

  BenchFlags bench;
  CLI::App *bench_cmd = app.add_subcommand("bench", "sweep solvers over SPCA sizes and seeds");
  bench.problem.attach(bench_cmd);
  bench.solvers_opt = bench_cmd->add_option("--solvers", bench.solvers, "solver list")->delimiter(',');
  bench.n_values_opt = bench_cmd->add_option("--n-values", bench.n_values, "sizes (default 11 in [100, 1000])")->delimiter(',');
  bench.seeds_opt = bench_cmd->add_option("--seeds", bench.seeds, "seeds per size, starting at --seed");
  bench.tol_opt = bench_cmd->add_option("--tol", bench.tol, "residual tolerance");
  bench.max_iter_opt = bench_cmd->add_option("--max-iter", bench.max_iter, "iteration cap");
  bench.jobs_opt = bench_cmd->add_option("--jobs", bench.jobs, "concurrent runs");
  bench_cmd->add_flag("--full", bench.full, "keep default sizes above 300");
  bench_cmd->add_option("--out", bench.out_dir, "output directory");
  bench_cmd->add_flag("--no-wall-time", bench.no_wall_time, "write 0 in wall-time columns (byte-stable output)");

  CheckFlags check;
  CLI::App *check_cmd = app.add_subcommand("check", "run the invariant suite on one instance");
  check.problem.attach(check_cmd);
  check_cmd->add_option("--points", check.points, "random points per check");
  for (CLI::App *sub : {solve_cmd, bench_cmd, check_cmd}) sub->footer(kSchemaHelp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? 0 : kExitError;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve, out);
    if (*bench_cmd) return cmd_bench(bench, out, err);
    return cmd_check(check, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace dcenv::cli
