#pragma once

#include <stdexcept>
#include <string>

namespace depcen {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative numerical routine failed to reach its tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (CLI, generator or estimator options).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// A conditional moment is undefined because one observation group is too small.
class MomentUndefinedError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace depcen
