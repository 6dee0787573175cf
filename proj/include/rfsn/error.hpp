#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rfsn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Lookup or interpolation request outside the tabulated range.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// Requested chirp bandwidth cannot be produced on the MCU toggle grid.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfsn
