#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dreplay {

enum class ErrorCode {
  ParseError,
  UnresolvedIdentifier,
  InvariantViolation,
  EmptyBuffer,
  InsufficientOverlap,
  NoConsistentStart,
  GapInControlFlow,
  ChecksumMismatch,
  BreakpointOutOfRange,
  DivergenceDetected,
  InvalidState,
  TraceFormat,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Domain error. `what()` carries the human message, `code()` the stable name
/// the CLI and the debug protocol report.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

/// Scenario text error with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace dreplay
