#pragma once

#include <stdexcept>
#include <string>

namespace cidgik {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported robot description.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Malformed problem data: goals, workspace constraints, files, arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown inside a solver (non-finite data, failed factorization).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cidgik
