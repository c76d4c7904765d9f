#pragma once

#include <stdexcept>
#include <string>

namespace qkm {

/// Base class for every error raised by the library. Each family maps to a
/// distinct process exit code in the command-line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Precondition or input-shape violation.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double final_violation)
      : Error(what), final_violation_(final_violation) {}
  int exit_code() const noexcept override { return 4; }
  double final_violation() const noexcept { return final_violation_; }

 private:
  double final_violation_;
};

[[noreturn]] void fail_validation(const std::string& message);

}  // namespace qkm
