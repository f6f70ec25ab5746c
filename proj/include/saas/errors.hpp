#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace saas {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not chain or do not match.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inputs outside an operation's documented domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during a computation.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::ptrdiff_t where)
      : Error(what), where_(where) {}
  /// Layer index or step index, depending on the raiser; -1 when unknown.
  std::ptrdiff_t where() const noexcept { return where_; }

 private:
  std::ptrdiff_t where_;
};

/// Floor larger than 1/K: the floored simplex is empty.
class InfeasibleFloorError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// IDX loader failures; each has its own type so callers can tell them apart.
class IdxFormatError : public Error {
 public:
  using Error::Error;
};
class IdxTruncatedError : public Error {
 public:
  using Error::Error;
};
class IdxCountMismatchError : public Error {
 public:
  using Error::Error;
};

/// Configuration problems. `kind` distinguishes I/O, syntax and range checks.
class ConfigError : public Error {
 public:
  enum class Kind { missing_file, parse, constraint };
  ConfigError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace saas
