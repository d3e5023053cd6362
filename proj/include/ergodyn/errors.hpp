#pragma once

#include <stdexcept>
#include <string>

namespace ergodyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition (empty batch, zero
/// direction, non-finite logits, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Shapes, widths or configuration values are inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Exact computation was requested over more examples than the configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace ergodyn
