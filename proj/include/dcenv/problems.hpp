#pragma once

#include "dcenv/atoms.hpp"
#include "dcenv/baselines.hpp"
#include "dcenv/envelope.hpp"
#include "dcenv/three_prox.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dcenv {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Portable seeded stream: mt19937_64 keyed by splitmix64 of (seed, n, stream).
/// Uniforms take the top 53 bits; normals use Box-Muller so draws are
/// bit-identical across standard libraries.
class Rng {
public:
  Rng(std::uint64_t seed, std::uint64_t n, std::uint64_t stream)
      : eng_(splitmix64(splitmix64(splitmix64(seed) ^ n) ^ stream)) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (spare_) {
      const double out = *spare_;
      spare_.reset();
      return out;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  Vec normal_vector(Index n) {
    Vec x(n);
    for (Index i = 0; i < n; ++i) x[i] = normal();
    return x;
  }

private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

enum : std::uint64_t { kStreamMatrix = 0, kStreamStart = 1, kStreamTests = 2 };

struct PowerIterationResult {
  double value = 0.0;
  Vec vector;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric PSD matrix; stops once
/// |S x - lambda x| <= tol lambda.
inline PowerIterationResult power_iteration(const Mat &sym, double tol = 1e-10, int max_iter = 10000) {
  const Index n = sym.rows();
  PowerIterationResult out;
  if (n == 0) {
    out.converged = true;
    return out;
  }
  Vec x = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  for (int it = 1; it <= max_iter; ++it) {
    Vec y = sym * x;
    const double lambda = x.dot(y);
    out.iterations = it;
    out.value = lambda;
    const double nrm = y.norm();
    if (nrm == 0.0) {
      out.vector = x;
      out.converged = true;
      return out;
    }
    if ((y - lambda * x).norm() <= tol * std::abs(lambda)) {
      out.vector = x;
      out.converged = true;
      return out;
    }
    x = y / nrm;
  }
  out.vector = x;
  return out;
}

/// 0.1 max_i sqrt(Sigma_ii).
inline double kappa_default(const Mat &sigma) {
  if (sigma.size() == 0) return 0.0;
  return 0.1 * std::sqrt(std::max(0.0, sigma.diagonal().maxCoeff()));
}

/// Random sparse-PCA data: A is 20n x n with a 10% Bernoulli mask of
/// standard normal entries, Sigma = A'A.
struct SpcaInstance {
  Index n = 0;
  Index rows = 0;
  double kappa = 0.0;
  std::uint64_t seed = 0;
  std::vector<Eigen::Triplet<double>> a_entries;  // coordinate list of A
  Mat sigma;
  double lambda_max = 0.0;

  double density() const {
    return rows > 0 && n > 0 ? static_cast<double>(a_entries.size()) / static_cast<double>(rows * n) : 0.0;
  }
};

/// argmin_{|x| <= 1} kappa |x|_1 - <v, x>: the normalized soft-threshold of v,
/// or 0 when every |v_i| <= kappa.
inline Vec spca_dca_step(const Vec &v, double kappa) {
  Vec t = soft_threshold(v, kappa);
  const double nrm = t.norm();
  if (nrm == 0.0) return t;
  return t / nrm;
}

/// SPCA as a DC problem: g = kappa |.|_1 + indicator(unit ball), h = s'Sigma s / 2.
struct SpcaProblem {
  SpcaInstance data;
  std::shared_ptr<const Quadratic> quadratic;
  DcInstance dc;
  SmoothDcInstance smooth;

  /// Seeded unit-norm Gaussian starting point shared by every solver.
  Vec start_point() const {
    Rng rng(data.seed, static_cast<std::uint64_t>(data.n), kStreamStart);
    Vec x = rng.normal_vector(data.n);
    return x / x.norm();
  }
};

inline SpcaInstance make_spca_data(Index n, std::optional<double> kappa, std::uint64_t seed) {
  require(n >= 2, "make_spca: n must be >= 2");
  SpcaInstance d;
  d.n = n;
  d.rows = 20 * n;
  d.seed = seed;
  Rng rng(seed, static_cast<std::uint64_t>(n), kStreamMatrix);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < d.rows; ++i) {
      if (rng.uniform() < 0.1) d.a_entries.emplace_back(static_cast<int>(i), static_cast<int>(j), rng.normal());
    }
  }
  Eigen::SparseMatrix<double> a(d.rows, n);
  a.setFromTriplets(d.a_entries.begin(), d.a_entries.end());
  Eigen::SparseMatrix<double> ata = a.transpose() * a;
  d.sigma = Mat(ata);
  d.sigma = 0.5 * (d.sigma + d.sigma.transpose()).eval();
  const PowerIterationResult pw = power_iteration(d.sigma);
  if (!pw.converged) throw NumericalError("make_spca: power iteration did not converge");
  d.lambda_max = pw.value;
  d.kappa = kappa ? *kappa : kappa_default(d.sigma);
  require(d.kappa >= 0.0, "make_spca: kappa must be >= 0");
  return d;
}

inline SpcaProblem make_spca(Index n, std::optional<double> kappa, std::uint64_t seed) {
  SpcaProblem p;
  p.data = make_spca_data(n, kappa, seed);
  p.quadratic = std::make_shared<Quadratic>(p.data.sigma);
  auto g = std::make_shared<L1BallComposite>(n, p.data.kappa);
  p.dc = make_dc_instance(g, p.quadratic, 0.0, p.quadratic);
  const double k = p.data.kappa;
  p.smooth = make_smooth_dc_instance(p.dc, [k](const Vec &v) { return spca_dca_step(v, k); });
  return p;
}

/// Three-term split of the same problem: g = kappa |.|_1 + indicator(ball),
/// h = 0, f = s'Sigma s / 2.
inline ThreeTermInstance make_spca3(const SpcaProblem &p) {
  return make_three_term_instance(p.quadratic, p.dc.g, std::make_shared<ZeroFunction>(p.data.n));
}

/// Small instance with a known stationary point, used as a test oracle.
struct SyntheticInstance {
  std::string name;
  std::string description;
  SmoothDcInstance smooth;  // two-term form with gradient oracle and DCA step
  std::optional<ThreeTermInstance> three;
  Vec stationary;
  double phi_star = 0.0;
  Vec start;            // primal starting point
  double gamma = 1.0;   // envelope stepsize
  double lambda = 1.0;
  double gamma_fbs = 1.0;
  double gamma_drs = 0.5;
  double grid_lo = -3.0;
  double grid_hi = 3.0;

  const DcInstance &dc() const { return smooth.dc; }
};

namespace detail {

inline Vec vec1(double a) { return Vec::Constant(1, a); }
inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline void set_baseline_steps(SyntheticInstance &s) {
  const double lip = s.smooth.smooth_h().lipschitz();
  s.gamma_fbs = lip > 0.0 ? 0.9 / lip : 1.0;
  s.gamma_drs = lip > 0.0 ? 0.45 / lip : 0.5;
}

}  // namespace detail

/// (a) g = x^2/2, h = x; (b) g = |x| + x^2, h = x^2/2; (b_hypo) g = |x| + x^2/2,
/// h = -x^2/4 with mu = 1/2; (c) separable 2-D elastic net minus a linear term;
/// (d) three-term f = x^2/2, g = x^2, h = 0.
inline std::vector<SyntheticInstance> synthetic_catalogue() {
  using detail::vec1;
  using detail::vec2;
  std::vector<SyntheticInstance> out;

  {
    SyntheticInstance s;
    s.name = "a";
    s.description = "g = x^2/2, h = x";
    auto g = std::make_shared<DiagQuadratic>(vec1(1.0), vec1(0.0));
    auto h = DiagQuadratic::linear(vec1(1.0));
    s.smooth = make_smooth_dc_instance(make_dc_instance(g, h, 0.0, h), [](const Vec &v) { return v; });
    s.stationary = vec1(1.0);
    s.phi_star = -0.5;
    s.start = vec1(-2.0);
    detail::set_baseline_steps(s);
    out.push_back(std::move(s));
  }
  {
    SyntheticInstance s;
    s.name = "b";
    s.description = "g = |x| + x^2, h = x^2/2";
    auto g = std::make_shared<ElasticNet>(vec1(1.0), vec1(2.0));
    auto h = std::make_shared<DiagQuadratic>(vec1(1.0), vec1(0.0));
    s.smooth = make_smooth_dc_instance(make_dc_instance(g, h, 0.0, h),
                                       [](const Vec &v) { return Vec(soft_threshold(v, 1.0) / 2.0); });
    s.stationary = vec1(0.0);
    s.phi_star = 0.0;
    s.start = vec1(1.5);
    s.gamma = 0.9;
    detail::set_baseline_steps(s);
    out.push_back(std::move(s));
  }
  {
    SyntheticInstance s;
    s.name = "b_hypo";
    s.description = "g = |x| + x^2/2, h = -x^2/4, mu = 1/2";
    auto g = std::make_shared<ElasticNet>(vec1(1.0), vec1(1.0));
    auto h = std::make_shared<DiagQuadratic>(vec1(-0.5), vec1(0.0));
    s.smooth = make_smooth_dc_instance(make_dc_instance(g, h, 0.5, h),
                                       [](const Vec &v) { return soft_threshold(v, 1.0); });
    s.stationary = vec1(0.0);
    s.phi_star = 0.0;
    s.start = vec1(1.5);
    s.gamma = 1.0;
    s.lambda = 0.5;
    detail::set_baseline_steps(s);
    out.push_back(std::move(s));
  }
  {
    SyntheticInstance s;
    s.name = "c";
    s.description = "g = sum 0.5|x_i| + (rho_i/2) x_i^2 with rho = (1, 2), h = 2 x_1 + 2 x_2";
    const Vec kappa = vec2(0.5, 0.5);
    const Vec rho = vec2(1.0, 2.0);
    auto g = std::make_shared<ElasticNet>(kappa, rho);
    auto h = DiagQuadratic::linear(vec2(2.0, 2.0));
    s.smooth = make_smooth_dc_instance(make_dc_instance(g, h, 0.0, h), [kappa, rho](const Vec &v) {
      return Vec((soft_threshold(v, kappa).array() / rho.array()).matrix());
    });
    s.stationary = vec2(1.5, 0.75);
    s.phi_star = -1.6875;
    s.start = vec2(-1.0, 2.0);
    detail::set_baseline_steps(s);
    out.push_back(std::move(s));
  }
  {
    SyntheticInstance s;
    s.name = "d";
    s.description = "three-term f = x^2/2, g = x^2, h = 0 (two-term form g = x^2, h = x^2/2)";
    auto f = std::make_shared<DiagQuadratic>(vec1(1.0), vec1(0.0));
    auto g = std::make_shared<DiagQuadratic>(vec1(2.0), vec1(0.0));
    auto zero = std::make_shared<ZeroFunction>(1);
    s.three = make_three_term_instance(f, g, zero);
    s.smooth = make_smooth_dc_instance(make_dc_instance(g, f, 0.0, f), [](const Vec &v) { return Vec(v / 2.0); });
    s.stationary = vec1(0.0);
    s.phi_star = 0.0;
    s.start = vec1(1.0);
    s.gamma = 0.9;
    detail::set_baseline_steps(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::optional<SyntheticInstance> find_synthetic(const std::string &name) {
  for (auto &s : synthetic_catalogue())
    if (s.name == name) return s;
  return std::nullopt;
}

struct GridMinimum {
  Vec argmin;
  double value = kInf;
};

/// Brute-force minimization of phi on [lo, hi]^dim at the given resolution. 2-D
/// problems are searched coarse-to-fine (1e-2 grid, then a +-0.02 window).
inline GridMinimum grid_minimize(const std::function<double(const Vec &)> &phi, Index dim, double lo, double hi,
                                 double resolution = 1e-4) {
  GridMinimum best;
  auto scan = [&](const Vec &lower, const Vec &upper, double step) {
    if (dim == 1) {
      const long count = std::lround((upper[0] - lower[0]) / step);
      for (long i = 0; i <= count; ++i) {
        Vec x = Vec::Constant(1, lower[0] + i * step);
        const double val = phi(x);
        if (val < best.value) best = {x, val};
      }
    } else {
      const long cx = std::lround((upper[0] - lower[0]) / step);
      const long cy = std::lround((upper[1] - lower[1]) / step);
      for (long i = 0; i <= cx; ++i)
        for (long j = 0; j <= cy; ++j) {
          Vec x(2);
          x << lower[0] + i * step, lower[1] + j * step;
          const double val = phi(x);
          if (val < best.value) best = {x, val};
        }
    }
  };
  require(dim == 1 || dim == 2, "grid_minimize supports 1-D and 2-D problems");
  const Vec lower = Vec::Constant(dim, lo);
  const Vec upper = Vec::Constant(dim, hi);
  if (dim == 1) {
    scan(lower, upper, resolution);
  } else {
    scan(lower, upper, 1e-2);
    const Vec center = best.argmin;
    scan(center.array() - 0.02, center.array() + 0.02, resolution);
  }
  return best;
}

}  // namespace dcenv
