#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgdvi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected,
                    std::size_t actual);
  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// Non-finite loss, gradient or parameters. Carries the step-size times
/// curvature estimate at the failing point when one could be computed.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what, double alpha_lambda_max = -1.0)
      : Error(what), alpha_lambda_max_(alpha_lambda_max) {}
  double alpha_lambda_max() const { return alpha_lambda_max_; }

 private:
  double alpha_lambda_max_;
};

/// Step Jacobian I - alpha*H is singular: the entropy change is -infinity.
class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input file could not be parsed. line() is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

}  // namespace sgdvi
