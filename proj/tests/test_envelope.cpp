#include "catch_amalgamated.hpp"
#include "support/oracles.hpp"

using namespace dcenv;
using Catch::Approx;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

// g = x^2/2, h = x
DcInstance quad_minus_linear() {
  auto g = std::make_shared<DiagQuadratic>(v1(1.0), v1(0.0));
  auto h = DiagQuadratic::linear(v1(1.0));
  return make_dc_instance(g, h, 0.0, h);
}

double grad_error(const DcInstance &inst, double gamma, const Vec &s, double rel_step = 1e-6) {
  const EnvelopeEval e = dce_eval(inst, gamma, s);
  const Vec fd = oracle::fd_gradient([&](const Vec &x) { return dce_eval(inst, gamma, x).env; }, s, rel_step);
  return (fd - e.grad).norm() / (1.0 + e.grad.norm());
}

}  // namespace

TEST_CASE("identical pair gives a zero envelope", "[envelope]") {
  auto g = std::make_shared<L1BallComposite>(3, 0.3);
  const DcInstance inst = make_dc_instance(g, g);
  std::mt19937_64 eng(1);
  for (int k = 0; k < 10; ++k) {
    const EnvelopeEval e = dce_eval(inst, 0.8, oracle::random_vec(eng, 3, 2.0));
    CHECK(e.env == 0.0);
    CHECK(e.grad.isZero(0.0));
    CHECK(is_stationary(inst, 0.8, e.s, 0.0));
    const SandwichBounds b = sandwich_bounds(inst, 0.8, e.s);
    CHECK(b.lower <= b.env);
    CHECK(b.env <= b.upper);
  }
}

TEST_CASE("1-D closed-form envelope", "[envelope]") {
  const DcInstance inst = quad_minus_linear();
  const EnvelopeEval e = dce_eval(inst, 1.0, v1(0.0));
  CHECK(e.u[0] == -1.0);
  CHECK(e.v[0] == 0.0);
  CHECK(e.env == Approx(0.5).epsilon(1e-15));
  CHECK(e.grad[0] == -1.0);

  // h^1(0) = min_w w + w^2/2 by direct minimization
  const double w = oracle::argmin_1d([](double t) { return t + t * t / 2; }, -5, 5);
  CHECK(w + w * w / 2 == Approx(-0.5).epsilon(1e-10));

  const SandwichBounds b = sandwich_bounds(inst, 1.0, v1(0.0));
  CHECK(b.lower == Approx(0.5).epsilon(1e-15));
  CHECK(b.upper == Approx(1.0).epsilon(1e-15));
  CHECK(b.env >= b.lower);
  CHECK(b.env <= b.upper);

  CHECK(is_stationary(inst, 1.0, v1(2.0), 0.0));
  CHECK_FALSE(is_stationary(inst, 1.0, v1(0.0), 1e-6));
  CHECK(dce_eval(inst, 1.0, v1(0.0)).residual == 1.0);
}

TEST_CASE("envelope gradient matches finite differences", "[envelope]") {
  std::mt19937_64 eng(17);
  for (const auto &syn : synthetic_catalogue()) {
    INFO(syn.name);
    for (int k = 0; k < 20; ++k) {
      const Vec s = oracle::random_vec(eng, syn.dc().dim(), 2.0);
      CHECK(grad_error(syn.dc(), syn.gamma, s) <= 1e-6);
    }
  }
  const SpcaProblem p = make_spca(20, std::nullopt, 4);
  const double gamma = 0.9 / p.data.lambda_max;
  Rng rng(4, 20, kStreamTests);
  for (int k = 0; k < 20; ++k) {
    const Vec s = rng.normal_vector(20) * 3.0;
    CHECK(grad_error(p.dc, gamma, s) <= 1e-6);
  }
}

TEST_CASE("sandwich bounds hold", "[envelope]") {
  const SpcaProblem p = make_spca(30, std::nullopt, 1);
  const double gamma = 0.9 / p.data.lambda_max;
  Rng rng(1, 30, kStreamTests);
  for (int k = 0; k < 50; ++k) {
    const Vec s = rng.normal_vector(30) * 5.0;
    const SandwichBounds b = sandwich_bounds(p.dc, gamma, s);
    CHECK(b.lower <= b.env + 1e-10 * (1.0 + std::abs(b.env)));
    CHECK(b.env <= b.upper + 1e-10 * (1.0 + std::abs(b.env)));
  }
  const auto hypo = *find_synthetic("b_hypo");
  std::mt19937_64 eng(2);
  for (int k = 0; k < 50; ++k) {
    const Vec s = oracle::random_vec(eng, 1, 3.0);
    const SandwichBounds b = sandwich_bounds(hypo.dc(), hypo.gamma, s);
    CHECK(b.lower <= b.env + 1e-12);
    CHECK(b.env <= b.upper + 1e-12);
  }
}

TEST_CASE("backward smooth prox", "[envelope]") {
  auto lin = DiagQuadratic::linear(Vec::Constant(2, 1.5));
  const Vec s = Vec::LinSpaced(2, -1.0, 1.0);
  CHECK((backward_smooth_prox(*lin, 0.3, s) - (s + 0.3 * Vec::Constant(2, 1.5))).norm() == 0.0);

  Quadratic eye(Mat::Identity(2, 2));
  CHECK((backward_smooth_prox(eye, 0.5, s) - 2.0 * s).norm() <= 1e-15);

  std::mt19937_64 eng(4);
  Mat b(5, 5);
  for (Index i = 0; i < 5; ++i) b.col(i) = oracle::random_vec(eng, 5);
  const Mat sigma = b.transpose() * b;
  const double lmax = oracle::symmetric_eigen(sigma).first.maxCoeff();
  Quadratic q(sigma);
  const Vec x = oracle::random_vec(eng, 5);
  const Vec ref = (Mat::Identity(5, 5) - (0.7 / lmax) * sigma).partialPivLu().solve(x);
  CHECK((backward_smooth_prox(q, 0.7 / lmax, x) - ref).norm() <= 1e-11 * (1.0 + ref.norm()));
}

TEST_CASE("forward-backward envelope values", "[envelope]") {
  ZeroFunction zero1(1);
  DiagQuadratic half_sq(v1(1.0), v1(0.0));
  CHECK(fbe_value(half_sq, zero1, 0.5, v1(2.0)) == Approx(1.0).epsilon(1e-15));

  DiagQuadratic shifted(v1(2.0), v1(-4.0));  // stationary at 2
  CHECK(fbe_value(shifted, zero1, 0.3, v1(2.0)) == Approx(shifted.value(v1(2.0))).epsilon(1e-15));
  CHECK_THROWS_AS(fbe_value(shifted, zero1, 0.6, v1(2.0)), ParameterError);
}

TEST_CASE("envelope equals the FBE under the backward-prox change of variable", "[envelope]") {
  std::mt19937_64 eng(6);
  SECTION("zero functions") {
    auto f = std::make_shared<DiagQuadratic>(Vec::Zero(2), Vec::Zero(2));
    std::vector<Vec> pts;
    for (int k = 0; k < 10; ++k) pts.push_back(oracle::random_vec(eng, 2));
    const FbeDeviation d = dce_fbe_equivalence_check(f, std::make_shared<ZeroFunction>(2), 0.5, pts);
    CHECK(d.max_abs == 0.0);
  }
  SECTION("1-D quadratic and l1") {
    auto f = std::make_shared<DiagQuadratic>(v1(1.0), v1(0.0));
    std::vector<Vec> pts;
    for (int k = 0; k < 100; ++k) pts.push_back(oracle::random_vec(eng, 1, 3.0));
    const FbeDeviation d = dce_fbe_equivalence_check(f, std::make_shared<L1Norm>(1, 1.0), 0.5, pts);
    CHECK(d.max_rel <= 1e-8);
  }
  SECTION("SPCA, n = 20") {
    const SpcaProblem p = make_spca(20, std::nullopt, 7);
    const double gamma = 0.9 / p.data.lambda_max;
    const NegativeSmooth f(p.quadratic);
    std::vector<Vec> pts;
    Rng rng(7, 20, kStreamTests);
    for (int k = 0; k < 100; ++k) pts.push_back(rng.normal_vector(20) * 2.0);
    const FbeDeviation d = dce_fbe_equivalence_check(f, p.dc.g, p.dc.h, gamma, pts);
    CHECK(d.max_rel <= 1e-8);
  }
}

TEST_CASE("envelope is convex when the smooth part is convex", "[envelope]") {
  std::mt19937_64 eng(12);
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
    const double ea = dce_eval(inst, gamma, a).env;
    const double ec = dce_eval(inst, gamma, c).env;
    const double em = dce_eval(inst, gamma, 0.5 * (a + c)).env;
    worst = std::max(worst, em - 0.5 * (ea + ec));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("hypoconvex instances", "[envelope]") {
  const auto hypo = *find_synthetic("b_hypo");
  CHECK(hypo.dc().mu == 0.5);
  CHECK_THROWS_AS(dce_eval(hypo.dc(), 2.0, v1(1.0)), ParameterError);
  // without the shift the pair is rejected
  CHECK_THROWS_AS(make_dc_instance(hypo.dc().g, hypo.dc().h, 0.0), ParameterError);
  std::mt19937_64 eng(3);
  for (int k = 0; k < 20; ++k) CHECK(grad_error(hypo.dc(), 1.5, oracle::random_vec(eng, 1, 3.0)) <= 1e-6);
}
