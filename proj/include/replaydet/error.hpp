#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace replaydet {

enum class ErrorCode {
  kPreconditionViolation,
  kFileNotFound,
  kUnsupportedFormat,
  kCorruptHeader,
  kIoError,
  kClipTooShort,
  kInvalidNumMel,
  kExternalCodecFailure,
  kExternalVocoderFailure,
  kCorruptPackage,
  kDimensionMismatch,
  kNonFiniteLoss,
  kSilentNoiseSource,
  kSilentSignal,
  kRirTooLong,
  kSingleClassInput,
  kMalformedLine,
  kMissingKey,
  kCorruptModel,
  kCorruptCache,
  kConfig,
};

std::string_view error_code_name(ErrorCode code);

// All recoverable failures in the library surface as this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::kPreconditionViolation, what);
}

}  // namespace replaydet
