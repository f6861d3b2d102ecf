#pragma once

#include <stdexcept>
#include <string>

namespace roll {

enum class ErrorCode {
  InvalidParameter,
  DegenerateRotation,
  DegenerateCorrespondence,
  EmptyIndex,
  MalformedScan,
  NoNearbyKeyframes,
  InsufficientCorrespondences,
  NumericalFailure,
  CorruptMap,
  CorruptFile,
  NoAnchor,
  NoOverlap,
  EmptySeries,
  ConfigError,
  LocalizationAbort,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DegenerateRotation: return "DegenerateRotation";
    case ErrorCode::DegenerateCorrespondence: return "DegenerateCorrespondence";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::MalformedScan: return "MalformedScan";
    case ErrorCode::NoNearbyKeyframes: return "NoNearbyKeyframes";
    case ErrorCode::InsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::CorruptMap: return "CorruptMap";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::NoAnchor: return "NoAnchor";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::LocalizationAbort: return "LocalizationAbort";
  }
  return "Unknown";
}

}  // namespace roll
