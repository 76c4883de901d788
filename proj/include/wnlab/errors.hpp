#pragma once

#include <stdexcept>
#include <string>

namespace wnlab {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorCategory {
  Usage = 1,      // bad configuration or arguments
  Data = 2,       // malformed or inconsistent input data
  Numerical = 3,  // domain, overflow, or solver failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Dimension mismatch or an invalid configuration value.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

/// Malformed file contents; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = 0)
      : Error(ErrorCategory::Data, line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Input that makes the requested quantity undefined (e.g. an all-zero matrix).
class DegenerateInstanceError : public Error {
 public:
  explicit DegenerateInstanceError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

/// A polar state with a zero direction vector.
class SingularStateError : public Error {
 public:
  explicit SingularStateError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// Argument outside the domain of a formula (log of a nonpositive entry, L < 2, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// An exponential factor left the double range; the log-space variant should be used.
class OverflowError : public Error {
 public:
  explicit OverflowError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// A theorem hypothesis required by a closed-form bound does not hold.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// The requested check does not apply to this trajectory (e.g. it never converged).
class NotApplicableError : public Error {
 public:
  explicit NotApplicableError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// The LP solver hit its pivot guard or lost numerical consistency.
class SolverFailure : public Error {
 public:
  explicit SolverFailure(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// An integration left the finite range.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

}  // namespace wnlab
