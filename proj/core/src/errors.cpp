#include "synergy/errors.hpp"

namespace synergy {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kData: return "DataError";
    case ErrorCode::kShape: return "ShapeError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kDegenerate: return "DegenerateError";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamplesError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

int error_exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kFormat: return 10;
    case ErrorCode::kData: return 11;
    case ErrorCode::kShape: return 12;
    case ErrorCode::kConfig: return 13;
    case ErrorCode::kDomain: return 14;
    case ErrorCode::kDegenerate: return 15;
    case ErrorCode::kInsufficientSamples: return 16;
    case ErrorCode::kIo: return 17;
  }
  return 1;
}

}  // namespace synergy
