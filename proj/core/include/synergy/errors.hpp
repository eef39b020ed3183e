#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synergy {

enum class ErrorCode {
  kFormat,
  kData,
  kShape,
  kConfig,
  kDomain,
  kDegenerate,
  kInsufficientSamples,
  kIo,
};

// Stable identifier used in machine-parsable CLI error lines.
std::string_view error_code_name(ErrorCode code) noexcept;

// Process exit status associated with each error kind (0 is success, 1 is
// reserved for unexpected failures, 2 for usage errors).
int error_exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define SYNERGY_DEFINE_ERROR(Name, Code)                              \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(Code, message) {} \
  };

SYNERGY_DEFINE_ERROR(FormatError, ErrorCode::kFormat)
SYNERGY_DEFINE_ERROR(DataError, ErrorCode::kData)
SYNERGY_DEFINE_ERROR(ShapeError, ErrorCode::kShape)
SYNERGY_DEFINE_ERROR(ConfigError, ErrorCode::kConfig)
SYNERGY_DEFINE_ERROR(DomainError, ErrorCode::kDomain)
SYNERGY_DEFINE_ERROR(DegenerateError, ErrorCode::kDegenerate)
SYNERGY_DEFINE_ERROR(InsufficientSamplesError, ErrorCode::kInsufficientSamples)
SYNERGY_DEFINE_ERROR(IoError, ErrorCode::kIo)

#undef SYNERGY_DEFINE_ERROR

}  // namespace synergy
