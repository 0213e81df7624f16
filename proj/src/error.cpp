#include "dreplay/error.hpp"

namespace dreplay {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnresolvedIdentifier: return "UnresolvedIdentifier";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::EmptyBuffer: return "EmptyBuffer";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::NoConsistentStart: return "NoConsistentStart";
    case ErrorCode::GapInControlFlow: return "GapInControlFlow";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::BreakpointOutOfRange: return "BreakpointOutOfRange";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::TraceFormat: return "TraceFormat";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

ParseError::ParseError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message)
    : Error(code, std::to_string(line) + ":" + std::to_string(column) + ": " + message), line_(line), column_(column) {}

}  // namespace dreplay
