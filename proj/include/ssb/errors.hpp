#pragma once

#include <stdexcept>
#include <string>

namespace ssb {

// Base class for every failure raised by the library.  The CLI maps
// ConfigError to exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A value outside the mathematical domain of an operation (non-finite
// potential, negative integrand under a square root, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValidityError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ResolutionError : public NumericError {
 public:
  using NumericError::NumericError;
};

class TruncationError : public NumericError {
 public:
  TruncationError(const std::string& what, double leaked)
      : NumericError(what), leaked_(leaked) {}
  double leaked() const noexcept { return leaked_; }

 private:
  double leaked_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key_path, const std::string& what)
      : Error(key_path + ": " + what), key_path_(key_path) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace ssb
