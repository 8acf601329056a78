#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpmin {

enum class ErrorKind {
  InvalidArgument,
  OddSampleCount,
  GridMismatch,
  FileFormat,
  BracketNotFound,
  NonConvergence,
  InvalidProfile,
  BoxTooSmall,
  UnnormalizedInput,
  DegenerateField,
  ResolutionExceeded,
  CriticalCouplingGuard,
  UnderResolved,
  InsufficientData,
  Config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::OddSampleCount: return "OddSampleCount";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::FileFormat: return "FileFormat";
    case ErrorKind::BracketNotFound: return "BracketNotFound";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InvalidProfile: return "InvalidProfile";
    case ErrorKind::BoxTooSmall: return "BoxTooSmall";
    case ErrorKind::UnnormalizedInput: return "UnnormalizedInput";
    case ErrorKind::DegenerateField: return "DegenerateField";
    case ErrorKind::ResolutionExceeded: return "ResolutionExceeded";
    case ErrorKind::CriticalCouplingGuard: return "CriticalCouplingGuard";
    case ErrorKind::UnderResolved: return "UnderResolved";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gpmin
