#pragma once

#include <stdexcept>
#include <string>

namespace hgba {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented invariant (graph, split, plan, file).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage could not complete (divergence, empty candidate sets, ...).
class PipelineError : public Error {
 public:
  using Error::Error;
};

}  // namespace hgba
