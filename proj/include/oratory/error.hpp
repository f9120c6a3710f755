#pragma once

#include <stdexcept>
#include <string>

namespace oratory {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed manifest, segment file or checkpoint.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Tensor or record dimensions that do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition on an argument (empty input, bad range, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced during a numerical operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace oratory
