#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace milab {

/// Error categories surfaced through both the C++ and the C interfaces.
enum class ErrorCode {
  NonFinite = 1,
  DimensionMismatch,
  DegreeTooLarge,
  AllCoefficientsVanish,
  AssumptionViolated,
  DegenerateGradient,
  ParseError,
  ValidationError,
  InsufficientData,
  IoError,
  InvalidArgument,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegreeTooLarge: return "DegreeTooLarge";
    case ErrorCode::AllCoefficientsVanish: return "AllCoefficientsVanish";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::DegenerateGradient: return "DegenerateGradient";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, std::string(error_code_name(code)) + ": " + msg);
}

inline bool is_finite(double x) { return std::isfinite(x); }

}  // namespace milab
