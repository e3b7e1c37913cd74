#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ciaftp {

enum class ErrorCode {
  InvalidArgument,
  StructuralError,
  IncompleteDictionary,
  OverlappingContexts,
  BadProbability,
  UnknownSymbol,
  MalformedSpec,
  Unsupported,
  EnumerationGuard,
  MaxDepthExceeded,
  IterationLimitExceeded,
  NodeBudgetExceeded,
  Reducible,
  Periodic,
  IoError,
};

constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::StructuralError: return "StructuralError";
    case ErrorCode::IncompleteDictionary: return "IncompleteDictionary";
    case ErrorCode::OverlappingContexts: return "OverlappingContexts";
    case ErrorCode::BadProbability: return "BadProbability";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::MalformedSpec: return "MalformedSpec";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::EnumerationGuard: return "EnumerationGuard";
    case ErrorCode::MaxDepthExceeded: return "MaxDepthExceeded";
    case ErrorCode::IterationLimitExceeded: return "IterationLimitExceeded";
    case ErrorCode::NodeBudgetExceeded: return "NodeBudgetExceeded";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::Periodic: return "Periodic";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and machine-parsable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ciaftp
