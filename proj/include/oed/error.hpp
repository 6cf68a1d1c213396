#pragma once

#include <stdexcept>
#include <string>

namespace oed {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to an operation (bad order, empty input, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Unknown benchmark, inconsistent problem dimensions, unsupported setup.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state met while stepping an ODE.
class IntegrationError : public Error {
 public:
  IntegrationError(double time, const std::string& what)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Singular or non-finite linear algebra.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for exhaustive computation.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Every optimizer start failed.
class OptimizationError : public Error {
 public:
  using Error::Error;
};

/// Malformed problem or design file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace oed
