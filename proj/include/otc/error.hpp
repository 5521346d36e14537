#pragma once

#include <stdexcept>
#include <string>

namespace otc {

/// Base class for all library failures. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Malformed input: dimension mismatch, non-finite entries, bad parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid argument"; }
};

/// A structural requirement on the input (irreducibility, aperiodicity) does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "precondition failed"; }
};

/// A linear solve or iterative method produced an unusable result.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical failure"; }
};

class IterationLimitError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "iteration limit exceeded"; }
};

}  // namespace otc
