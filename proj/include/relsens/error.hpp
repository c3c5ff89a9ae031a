#pragma once

#include <stdexcept>
#include <string>

namespace relsens {

enum class ErrorCode {
  InvalidMoments,
  InvalidProbability,
  DomainError,
  NotPositiveDefinite,
  NoConvergence,
  EmptyCoefficients,
  ParseError,
  UnknownIdentifier,
  EvaluationError,
  NonFiniteValue,
  NonFiniteLimitState,
  DegenerateVariance,
  DegenerateWeights,
  GradientFailure,
  ZeroVector,
  InvalidStep,
  IndexOutOfRange,
  EmptyBatch,
  AllSafe,
  OutOfRange,
  InvalidArgument,
  InvalidConfig,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidMoments: return "InvalidMoments";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyCoefficients: return "EmptyCoefficients";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::EvaluationError: return "EvaluationError";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonFiniteLimitState: return "NonFiniteLimitState";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::GradientFailure: return "GradientFailure";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::AllSafe: return "AllSafe";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Library-wide exception carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace relsens
