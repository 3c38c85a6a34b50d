#pragma once

#include <stdexcept>
#include <string>

namespace rwlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// phi_ratio evaluated where the characteristic function equals 1.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// A combinatorial or search budget was exhausted.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A count left the exact 64-bit range.
class CountOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace rwlab
