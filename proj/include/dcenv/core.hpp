#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dcenv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Invalid stepsize, relaxation, dimension or matrix argument.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation is not available for this function (e.g. a
/// diagonal-metric prox on a non-separable atom).
class CapabilityError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// An inner iteration failed or an invariant was violated at runtime.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// g - h on the extended reals with the convention inf - inf = inf.
inline double dc_difference(double g, double h) {
  if (g == kInf) return kInf;
  return g - h;
}

inline bool is_finite(double x) { return std::isfinite(x); }

inline void require(bool ok, const std::string &what) {
  if (!ok) throw ParameterError(what);
}

inline void require_positive(double x, const char *name) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw ParameterError(std::string(name) + " must be a finite positive number");
}

inline void require_dim(const Vec &x, Index n, const char *where) {
  if (x.size() != n)
    throw ParameterError(std::string(where) + ": dimension mismatch (expected " +
                         std::to_string(n) + ", got " + std::to_string(x.size()) + ")");
}

/// Elementwise positive diagonal of a matrix stepsize or relaxation.
class DiagonalStepsize {
public:
  DiagonalStepsize() = default;
  explicit DiagonalStepsize(Vec entries) : entries_(std::move(entries)) {
    for (Index i = 0; i < entries_.size(); ++i)
      if (!(entries_[i] > 0.0) || !std::isfinite(entries_[i]))
        throw ParameterError("DiagonalStepsize entries must be finite and > 0");
  }
  static DiagonalStepsize uniform(Index n, double value) {
    return DiagonalStepsize(Vec::Constant(n, value));
  }

  const Vec &entries() const { return entries_; }
  Index size() const { return entries_.size(); }
  double operator[](Index i) const { return entries_[i]; }

  /// Common value if every entry is bitwise equal to the first.
  bool is_uniform() const {
    for (Index i = 1; i < entries_.size(); ++i)
      if (entries_[i] != entries_[0]) return false;
    return true;
  }

private:
  Vec entries_;
};

}  // namespace dcenv
