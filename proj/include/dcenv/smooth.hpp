#pragma once

#include "dcenv/core.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

namespace dcenv {

/// A real-valued function with L-Lipschitz gradient.
///
/// sigma() and sigma_neg() are the moduli for which f - (sigma/2)|.|^2 and
/// -f - (sigma_neg/2)|.|^2 are convex; both lie in [-L, L].
class SmoothFunction {
public:
  virtual ~SmoothFunction() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vec &x) const = 0;
  virtual Vec gradient(const Vec &x) const = 0;
  virtual Mat hessian(const Vec &x) const = 0;
  virtual double lipschitz() const = 0;
  virtual double sigma() const { return -lipschitz(); }
  virtual double sigma_neg() const { return -lipschitz(); }

  /// Largest admissible stepsize for the backward prox, 1/[sigma_neg]_-.
  double backward_step_limit() const {
    const double neg = std::max(0.0, -sigma_neg());
    return neg > 0.0 ? 1.0 / neg : kInf;
  }

  /// prox_{-gamma f}(s): the unique u with s = u - gamma grad f(u).
  Vec backward_prox(const Vec &s, double gamma) const {
    require_dim(s, dim(), "backward_prox");
    require_positive(gamma, "backward prox stepsize");
    if (!(gamma < backward_step_limit()))
      throw ParameterError("backward prox needs gamma < 1/[sigma_-f]_-");
    return do_backward_prox(s, gamma);
  }

protected:
  /// Damped Newton on r(u) = u - gamma grad f(u) - s.
  virtual Vec do_backward_prox(const Vec &s, double gamma) const {
    constexpr int kMaxNewton = 100;
    const double tol = 1e-12 * (1.0 + s.norm());
    const Index n = s.size();
    Vec u = s;
    Vec r = u - gamma * gradient(u) - s;
    double rnorm = r.norm();
    for (int it = 0; it < kMaxNewton && rnorm > tol; ++it) {
      const Mat jac = Mat::Identity(n, n) - gamma * hessian(u);
      const Vec step = jac.partialPivLu().solve(r);
      double t = 1.0;
      Vec trial;
      Vec rtrial;
      for (int back = 0; back < 40; ++back) {
        trial = u - t * step;
        rtrial = trial - gamma * gradient(trial) - s;
        if (rtrial.norm() < rnorm || t < 1e-10) break;
        t *= 0.5;
      }
      u = std::move(trial);
      r = std::move(rtrial);
      rnorm = r.norm();
    }
    if (!(rnorm <= tol)) {
      std::ostringstream msg;
      msg << "backward prox did not converge: residual " << rnorm << " > " << tol
          << " after " << kMaxNewton << " Newton steps";
      throw NumericalError(msg.str());
    }
    return u;
  }
};

using SmoothPtr = std::shared_ptr<const SmoothFunction>;

/// f(u) = sum_i w log(1 + exp(u_i)); convex, L = w/4. Used to exercise the
/// Newton path of the backward prox.
class LogisticSum final : public SmoothFunction {
public:
  LogisticSum(Index n, double weight = 1.0) : n_(n), w_(weight) {
    require(n > 0, "LogisticSum: dimension must be positive");
    require_positive(weight, "LogisticSum weight");
  }
  Index dim() const override { return n_; }
  double value(const Vec &x) const override {
    double acc = 0.0;
    for (Index i = 0; i < n_; ++i) acc += softplus(x[i]);
    return w_ * acc;
  }
  Vec gradient(const Vec &x) const override {
    Vec g(n_);
    for (Index i = 0; i < n_; ++i) g[i] = w_ * logistic(x[i]);
    return g;
  }
  Mat hessian(const Vec &x) const override {
    Mat hess = Mat::Zero(n_, n_);
    for (Index i = 0; i < n_; ++i) {
      const double p = logistic(x[i]);
      hess(i, i) = w_ * p * (1.0 - p);
    }
    return hess;
  }
  double lipschitz() const override { return 0.25 * w_; }
  double sigma() const override { return 0.0; }
  double sigma_neg() const override { return -0.25 * w_; }

private:
  static double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
  static double logistic(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }
  Index n_;
  double w_;
};

/// -f as a smooth function.
class NegativeSmooth final : public SmoothFunction {
public:
  explicit NegativeSmooth(SmoothPtr f) : f_(std::move(f)) { require(f_ != nullptr, "NegativeSmooth: null function"); }

  Index dim() const override { return f_->dim(); }
  double value(const Vec &x) const override { return -f_->value(x); }
  Vec gradient(const Vec &x) const override { return -f_->gradient(x); }
  Mat hessian(const Vec &x) const override { return -f_->hessian(x); }
  double lipschitz() const override { return f_->lipschitz(); }
  double sigma() const override { return f_->sigma_neg(); }
  double sigma_neg() const override { return f_->sigma(); }

private:
  SmoothPtr f_;
};

}  // namespace dcenv
