#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ibscale {

enum class ErrorCode {
  EmptyInput,
  InvalidLevel,
  NotADistribution,
  DimensionError,
  InvalidClusterCount,
  EnumerationBound,
  DomainError,
  DegenerateScale,
  ParseError,
  InvalidConfig,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::NotADistribution: return "NotADistribution";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::InvalidClusterCount: return "InvalidClusterCount";
    case ErrorCode::EnumerationBound: return "EnumerationBound";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a stable code so the CLI can
// emit machine-readable error records.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ibscale
