#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dragkit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced or consumed by a numeric operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Tracker regression blew up; the message suggests a smaller step size.
class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

/// Every pixel of a supervision patch fell outside the field.
class DegeneratePatchError : public Error {
 public:
  using Error::Error;
};

/// Operation not allowed in the session's current status.
class StateError : public Error {
 public:
  using Error::Error;
};

class UnsupportedScenarioError : public Error {
 public:
  using Error::Error;
};

/// Collects every violation found while validating an input, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace dragkit
