#pragma once

#include <stdexcept>
#include <string>

namespace cavlab {

/// Base class for every error raised by the library. The CLI maps each
/// subclass onto a distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or invariant on user-supplied data was violated.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read, parsed or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure (integrator, optimizer) failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Least-squares design matrix does not have full column rank.
class RankDeficiencyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kIo = 2;
inline constexpr int kValidation = 3;
inline constexpr int kConvergence = 4;
inline constexpr int kInternal = 5;
}  // namespace exit_code

}  // namespace cavlab
