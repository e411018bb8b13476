#pragma once

#include <stdexcept>
#include <string>

namespace superlime {

// Root of every error the library raises. The CLI maps each subclass onto a
// distinct exit code (usage 1, I/O 2, compute 3, adapter 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or configuration violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  enum class Kind { io_failure, unsupported_depth, malformed };

  IoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Numerical or algorithmic failure during a computation.
class ComputeError : public Error {
 public:
  using Error::Error;
};

// Every response of the surrogate's target variable was identical, so there is
// nothing to explain.
class ZeroSignalError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

}  // namespace superlime
