#pragma once

#include <stdexcept>
#include <string>

namespace invflag {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative kernel exhausted its budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A computed object failed one of its own postconditions.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Caller supplied arguments outside an operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace invflag
