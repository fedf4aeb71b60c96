#pragma once

#include <stdexcept>
#include <string>

namespace cubify {

// Base of all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or schema. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Degenerate geometry or a numeric procedure that failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File missing, unreadable, or unwritable. CLI exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cubify
