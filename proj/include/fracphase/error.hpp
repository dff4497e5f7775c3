#pragma once

#include <stdexcept>
#include <string>

namespace fracphase {

enum class ErrorCode {
  BadValue,
  MissingKey,
  GridMismatch,
  LengthMismatch,
  InsufficientHistory,
  NonConverged,
  NegativeShift,
  Io,
};

const char* to_string(ErrorCode code);

/// Error raised by every module of the library. The code names the failure
/// class so callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Solver failure at a specific time level.
class StepError : public Error {
 public:
  StepError(ErrorCode code, int step, const std::string& what)
      : Error(code, "step " + std::to_string(step) + ": " + what), step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadValue: return "BAD_VALUE";
    case ErrorCode::MissingKey: return "MISSING_KEY";
    case ErrorCode::GridMismatch: return "GRID_MISMATCH";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::InsufficientHistory: return "INSUFFICIENT_HISTORY";
    case ErrorCode::NonConverged: return "NON_CONVERGED";
    case ErrorCode::NegativeShift: return "NEGATIVE_SHIFT";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace fracphase
