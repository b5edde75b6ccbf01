#pragma once

#include <stdexcept>
#include <string>

namespace anisohit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A configuration that is valid in principle but not implemented.
class UnsupportedConfiguration : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Quadrature, factorization or solver failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class KernelError : public Error {
 public:
  using Error::Error;
};

// Monte Carlo ladder too coarse or too fine to produce an estimate.
class InsufficientResolution : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace anisohit
