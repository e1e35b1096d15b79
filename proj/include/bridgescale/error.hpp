#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bridgescale {

// Machine-readable failure categories. The string forms are part of the CLI
// and JSON output, so they must stay stable.
enum class ErrorCode {
  kNonFiniteInput,
  kNotPsd,
  kNotPd,
  kNotPositive,
  kNotUnital,
  kNotUnitary,
  kNotStochastic,
  kNotConverged,
  kDimensionMismatch,
  kZeroTrace,
  kZeroRow,
  kZeroColumn,
  kBandInvalid,
  kTargetMismatch,
  kSingular,
  kParseError,
  kValidationError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteInput: return "NON_FINITE_INPUT";
    case ErrorCode::kNotPsd: return "NOT_PSD";
    case ErrorCode::kNotPd: return "NOT_PD";
    case ErrorCode::kNotPositive: return "NOT_POSITIVE";
    case ErrorCode::kNotUnital: return "NOT_UNITAL";
    case ErrorCode::kNotUnitary: return "NOT_UNITARY";
    case ErrorCode::kNotStochastic: return "NOT_STOCHASTIC";
    case ErrorCode::kNotConverged: return "NOT_CONVERGED";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kZeroTrace: return "ZERO_TRACE";
    case ErrorCode::kZeroRow: return "ZERO_ROW";
    case ErrorCode::kZeroColumn: return "ZERO_COLUMN";
    case ErrorCode::kBandInvalid: return "BAND_INVALID";
    case ErrorCode::kTargetMismatch: return "TARGET_MISMATCH";
    case ErrorCode::kSingular: return "SINGULAR";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kValidationError: return "VALIDATION_ERROR";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bridgescale
