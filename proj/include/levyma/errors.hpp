#pragma once

#include <stdexcept>
#include <string>

namespace levyma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the domain of the operation.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An operation was handed a model variant it does not support.
class WrongVariantError : public Error {
 public:
  using Error::Error;
};

/// The AR polynomial has a root in the closed unit disk.
class StationarityError : public Error {
 public:
  using Error::Error;
};

/// Estimated work exceeds the configured budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// The estimated long-run variance is not strictly positive.
class DegenerateVarianceError : public Error {
 public:
  explicit DegenerateVarianceError(const std::string& what, double estimate = 0.0)
      : Error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

/// Quadrature did not reach its tolerance within the node budget.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double estimate, double error_bound)
      : Error(what + " (estimate " + std::to_string(estimate) + ", error bound " +
              std::to_string(error_bound) + ")"),
        estimate_(estimate),
        error_bound_(error_bound) {}
  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// The model is not well defined (e.g. a divergent stable-integral scale).
class ModelInvalidError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data inconsistent with an operation's contract (e.g. a short lag table).
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace levyma
