#pragma once

#include <stdexcept>
#include <string>

namespace vcae {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible matrix/vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-finite values, failed convergence, degenerate data.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcae
