#include "replaydet/error.hpp"

namespace replaydet {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPreconditionViolation: return "PreconditionViolation";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kClipTooShort: return "ClipTooShort";
    case ErrorCode::kInvalidNumMel: return "InvalidNumMel";
    case ErrorCode::kExternalCodecFailure: return "ExternalCodecFailure";
    case ErrorCode::kExternalVocoderFailure: return "ExternalVocoderFailure";
    case ErrorCode::kCorruptPackage: return "CorruptPackage";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kSilentNoiseSource: return "SilentNoiseSource";
    case ErrorCode::kSilentSignal: return "SilentSignal";
    case ErrorCode::kRirTooLong: return "RirTooLong";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kMissingKey: return "MissingKey";
    case ErrorCode::kCorruptModel: return "CorruptModel";
    case ErrorCode::kCorruptCache: return "CorruptCache";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

}  // namespace replaydet
