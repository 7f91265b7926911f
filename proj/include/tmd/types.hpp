#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>

namespace tmd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Vector-valued map on the primal (or dual) space.
using VectorMap = std::function<Vector(const Vector&)>;
using ScalarMap = std::function<double(const Vector&)>;

// Error hierarchy. Everything the library throws derives from tmd::Error so
// callers (the CLI in particular) can map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the region where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters or a refuted precondition when building an object.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Requested capability is not available for this input family.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// An iterative solve ran out of iterations.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// State became NaN/inf during integration.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace tmd
