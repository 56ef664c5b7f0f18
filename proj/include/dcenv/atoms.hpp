#pragma once

#include "dcenv/prox.hpp"
#include "dcenv/smooth.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace dcenv {

// Relative slack on set membership so that a projection whose norm rounds to
// radius*(1+ulp) still evaluates inside the domain.
inline constexpr double kFeasibilitySlack = 1e-12;

/// sign(x) max(|x| - tau, 0); exactly 0 at |x| == tau.
inline double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

inline Vec soft_threshold(const Vec &x, double tau) {
  require(tau >= 0.0, "soft_threshold: tau must be >= 0");
  Vec out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], tau);
  return out;
}

inline Vec soft_threshold(const Vec &x, const Vec &tau) {
  require_dim(tau, x.size(), "soft_threshold thresholds");
  Vec out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], tau[i]);
  return out;
}

inline Vec project_unit_ball(const Vec &x, double radius = 1.0) {
  const double nrm = x.norm();
  if (nrm <= radius) return x;
  return x * (radius / nrm);
}

/// Prox of tau-scaled l1 plus the unit-ball indicator:
/// sign(s) [|s| - tau]_+ / max(1, |[|s| - tau]_+|).
inline Vec prox_l1_ball(const Vec &s, double tau) {
  Vec t = soft_threshold(s, tau);
  const double nrm = t.norm();
  if (nrm > 1.0) t /= nrm;
  return t;
}

/// f = 0.
class ZeroFunction final : public ProxFunction {
public:
  explicit ZeroFunction(Index n) : n_(n) { require(n >= 0, "ZeroFunction: negative dimension"); }
  Index dim() const override { return n_; }
  std::string name() const override { return "zero"; }
  double value(const Vec &) const override { return 0.0; }
  bool supports_diagonal() const override { return true; }
  bool prox_is_affine() const override { return true; }
  Vec prox_linear_part(const Vec &d, double) const override { return d; }

protected:
  Vec do_prox(const Vec &x, double) const override { return x; }
  Vec do_prox_diagonal(const Vec &x, const Vec &) const override { return x; }

private:
  Index n_;
};

/// kappa |x|_1.
class L1Norm final : public ProxFunction {
public:
  L1Norm(Index n, double kappa = 1.0) : n_(n), kappa_(kappa) {
    require(kappa >= 0.0, "L1Norm: kappa must be >= 0");
  }
  Index dim() const override { return n_; }
  std::string name() const override { return "l1"; }
  double value(const Vec &x) const override { return kappa_ * x.lpNorm<1>(); }
  bool supports_diagonal() const override { return true; }
  double kappa() const { return kappa_; }

protected:
  Vec do_prox(const Vec &x, double gamma) const override { return soft_threshold(x, kappa_ * gamma); }
  Vec do_prox_diagonal(const Vec &x, const Vec &gamma) const override {
    return soft_threshold(x, Vec(kappa_ * gamma));
  }

private:
  Index n_;
  double kappa_;
};

/// sum_i kappa_i |x_i| + (rho_i / 2) x_i^2 with kappa, rho >= 0.
class ElasticNet final : public ProxFunction {
public:
  ElasticNet(Vec kappa, Vec rho) : kappa_(std::move(kappa)), rho_(std::move(rho)) {
    require(kappa_.size() == rho_.size(), "ElasticNet: kappa/rho size mismatch");
    require((kappa_.array() >= 0.0).all() && (rho_.array() >= 0.0).all(),
            "ElasticNet: weights must be >= 0");
  }
  Index dim() const override { return kappa_.size(); }
  std::string name() const override { return "elastic_net"; }
  double value(const Vec &x) const override {
    return (kappa_.array() * x.array().abs()).sum() + 0.5 * (rho_.array() * x.array().square()).sum();
  }
  bool supports_diagonal() const override { return true; }

protected:
  Vec do_prox(const Vec &x, double gamma) const override {
    return do_prox_diagonal(x, Vec::Constant(x.size(), gamma));
  }
  Vec do_prox_diagonal(const Vec &x, const Vec &gamma) const override {
    Vec out(x.size());
    for (Index i = 0; i < x.size(); ++i)
      out[i] = soft_threshold(x[i], gamma[i] * kappa_[i]) / (1.0 + gamma[i] * rho_[i]);
    return out;
  }

private:
  Vec kappa_;
  Vec rho_;
};

/// Indicator of the closed Euclidean ball of the given radius.
class BallIndicator final : public ProxFunction {
public:
  BallIndicator(Index n, double radius = 1.0) : n_(n), radius_(radius) {
    require_positive(radius, "BallIndicator radius");
  }
  Index dim() const override { return n_; }
  std::string name() const override { return "ball_indicator"; }
  double value(const Vec &x) const override {
    return x.norm() <= radius_ * (1.0 + kFeasibilitySlack) ? 0.0 : kInf;
  }

protected:
  Vec do_prox(const Vec &x, double) const override { return project_unit_ball(x, radius_); }

private:
  Index n_;
  double radius_;
};

/// kappa |x|_1 + indicator of the unit ball.
class L1BallComposite final : public ProxFunction {
public:
  L1BallComposite(Index n, double kappa) : n_(n), kappa_(kappa) {
    require(kappa >= 0.0, "L1BallComposite: kappa must be >= 0");
  }
  Index dim() const override { return n_; }
  std::string name() const override { return "l1_ball"; }
  double value(const Vec &x) const override {
    if (x.norm() > 1.0 + kFeasibilitySlack) return kInf;
    return kappa_ * x.lpNorm<1>();
  }
  double kappa() const { return kappa_; }

protected:
  Vec do_prox(const Vec &x, double gamma) const override { return prox_l1_ball(x, kappa_ * gamma); }

private:
  Index n_;
  double kappa_;
};

/// Indicator of {x : |x|_inf <= r}; the conjugate of r |.|_1.
class LinfBallIndicator final : public ProxFunction {
public:
  LinfBallIndicator(Index n, double radius = 1.0) : n_(n), radius_(radius) {
    require(radius >= 0.0, "LinfBallIndicator: radius must be >= 0");
  }
  Index dim() const override { return n_; }
  std::string name() const override { return "linf_ball_indicator"; }
  double value(const Vec &x) const override {
    return x.lpNorm<Eigen::Infinity>() <= radius_ * (1.0 + kFeasibilitySlack) ? 0.0 : kInf;
  }
  bool supports_diagonal() const override { return true; }

protected:
  Vec do_prox(const Vec &x, double) const override { return x.cwiseMax(-radius_).cwiseMin(radius_); }
  Vec do_prox_diagonal(const Vec &x, const Vec &) const override {
    return x.cwiseMax(-radius_).cwiseMin(radius_);
  }

private:
  Index n_;
  double radius_;
};

/// Indicator of {0}; its conjugate is the zero function.
class ZeroIndicator final : public ProxFunction {
public:
  explicit ZeroIndicator(Index n) : n_(n) {}
  Index dim() const override { return n_; }
  std::string name() const override { return "zero_indicator"; }
  double value(const Vec &x) const override { return x.isZero(0.0) ? 0.0 : kInf; }
  bool supports_diagonal() const override { return true; }
  bool prox_is_affine() const override { return true; }
  Vec prox_linear_part(const Vec &d, double) const override { return Vec::Zero(d.size()); }

protected:
  Vec do_prox(const Vec &x, double) const override { return Vec::Zero(x.size()); }
  Vec do_prox_diagonal(const Vec &x, const Vec &) const override { return Vec::Zero(x.size()); }

private:
  Index n_;
};

/// Separable quadratic sum_i (d_i / 2) x_i^2 + c_i x_i. Negative d_i make it
/// hypoconvex with modulus max(0, -min d).
class DiagQuadratic final : public ProxFunction, public SmoothFunction {
public:
  DiagQuadratic(Vec diag, Vec linear) : d_(std::move(diag)), c_(std::move(linear)) {
    require(d_.size() == c_.size(), "DiagQuadratic: size mismatch");
  }
  static std::shared_ptr<DiagQuadratic> linear(Vec c) {
    Vec d = Vec::Zero(c.size());
    return std::make_shared<DiagQuadratic>(std::move(d), std::move(c));
  }

  Index dim() const override { return d_.size(); }
  std::string name() const override { return "diag_quadratic"; }
  double value(const Vec &x) const override {
    return 0.5 * (d_.array() * x.array().square()).sum() + c_.dot(x);
  }
  Vec gradient(const Vec &x) const override { return (d_.array() * x.array()).matrix() + c_; }
  Mat hessian(const Vec &) const override { return d_.asDiagonal(); }
  double lipschitz() const override { return d_.size() ? d_.cwiseAbs().maxCoeff() : 0.0; }
  double sigma() const override { return d_.size() ? d_.minCoeff() : 0.0; }
  double sigma_neg() const override { return d_.size() ? -d_.maxCoeff() : 0.0; }
  double weak_convexity() const override { return d_.size() ? std::max(0.0, -d_.minCoeff()) : 0.0; }
  bool supports_diagonal() const override { return true; }
  bool prox_is_affine() const override { return true; }
  Vec prox_linear_part(const Vec &d, double gamma) const override {
    return (d.array() / (1.0 + gamma * d_.array())).matrix();
  }

  const Vec &diag() const { return d_; }
  const Vec &linear_term() const { return c_; }

protected:
  Vec do_prox(const Vec &x, double gamma) const override {
    return ((x - gamma * c_).array() / (1.0 + gamma * d_.array())).matrix();
  }
  Vec do_prox_diagonal(const Vec &x, const Vec &gamma) const override {
    return ((x.array() - gamma.array() * c_.array()) / (1.0 + gamma.array() * d_.array())).matrix();
  }
  Vec do_backward_prox(const Vec &s, double gamma) const override {
    return ((s + gamma * c_).array() / (1.0 - gamma * d_.array())).matrix();
  }

private:
  Vec d_;
  Vec c_;
};

/// Dense quadratic (1/2) x'Qx + c'x with symmetric Q.
///
/// One symmetric eigendecomposition Q = V diag(w) V' is computed at
/// construction; (I + gamma Q)^{-1} is then applied as V diag(1/(1 + gamma w)) V'
/// for any gamma (including the negative-step solve of the backward prox), at
/// O(n^2) per call.
class Quadratic final : public ProxFunction, public SmoothFunction {
public:
  explicit Quadratic(Mat q) : Quadratic(std::move(q), Vec()) {}
  Quadratic(Mat q, Vec c) : q_(std::move(q)), c_(std::move(c)) {
    require(q_.rows() == q_.cols(), "Quadratic: Q must be square");
    if (c_.size() == 0) c_ = Vec::Zero(q_.rows());
    require(c_.size() == q_.rows(), "Quadratic: linear term size mismatch");
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ParameterError("Quadratic: Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> eig(q_);
    if (eig.info() != Eigen::Success) throw NumericalError("Quadratic: eigendecomposition failed");
    vecs_ = eig.eigenvectors();
    vals_ = eig.eigenvalues();
  }

  Index dim() const override { return q_.rows(); }
  std::string name() const override { return "quadratic"; }
  double value(const Vec &x) const override { return 0.5 * x.dot(q_ * x) + c_.dot(x); }
  Vec gradient(const Vec &x) const override { return q_ * x + c_; }
  Mat hessian(const Vec &) const override { return q_; }
  double lipschitz() const override { return vals_.size() ? vals_.cwiseAbs().maxCoeff() : 0.0; }
  double sigma() const override { return vals_.size() ? vals_.minCoeff() : 0.0; }
  double sigma_neg() const override { return vals_.size() ? -vals_.maxCoeff() : 0.0; }
  double weak_convexity() const override { return vals_.size() ? std::max(0.0, -vals_.minCoeff()) : 0.0; }
  bool supports_diagonal() const override { return true; }
  bool prox_is_affine() const override { return true; }
  Vec prox_linear_part(const Vec &d, double gamma) const override { return shifted_solve(d, gamma); }

  const Mat &matrix() const { return q_; }
  const Vec &linear_term() const { return c_; }
  const Vec &eigenvalues() const { return vals_; }

  /// (I + t Q)^{-1} x using the cached spectral factors.
  Vec shifted_solve(const Vec &x, double t) const {
    const Vec denom = (1.0 + t * vals_.array()).matrix();
    if (denom.size() && !(denom.minCoeff() > 0.0))
      throw ParameterError("Quadratic: I + tQ is not positive definite");
    Vec y = vecs_.transpose() * x;
    y.array() /= denom.array();
    return vecs_ * y;
  }

protected:
  Vec do_prox(const Vec &x, double gamma) const override { return shifted_solve(x - gamma * c_, gamma); }
  Vec do_prox_diagonal(const Vec &x, const Vec &gamma) const override {
    const Index n = dim();
    const Mat lhs = Mat::Identity(n, n) + gamma.asDiagonal() * q_;
    const Vec rhs = x - (gamma.array() * c_.array()).matrix();
    return lhs.partialPivLu().solve(rhs);
  }
  Vec do_backward_prox(const Vec &s, double gamma) const override {
    return shifted_solve(s + gamma * c_, -gamma);
  }

private:
  Mat q_;
  Vec c_;
  Mat vecs_;
  Vec vals_;
};

/// h = -f for a smooth f, exposed as a (hypoconvex) prox function whose prox is
/// the backward prox of f.
class NegatedSmooth final : public ProxFunction {
public:
  explicit NegatedSmooth(SmoothPtr f) : f_(std::move(f)) {
    require(f_ != nullptr, "NegatedSmooth: null function");
  }
  Index dim() const override { return f_->dim(); }
  std::string name() const override { return "negated_smooth"; }
  double value(const Vec &x) const override { return -f_->value(x); }
  double weak_convexity() const override { return std::max(0.0, -f_->sigma_neg()); }

protected:
  Vec do_prox(const Vec &x, double gamma) const override { return f_->backward_prox(x, gamma); }

private:
  SmoothPtr f_;
};

}  // namespace dcenv
