#pragma once

#include <stdexcept>
#include <string>

namespace survcross {

/// Argument outside the documented domain of an operation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs that collapse the problem (equal times, equal shapes, singular solves).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs that cannot come from any valid Weibull curve.
class InconsistentInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical procedure stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace survcross
