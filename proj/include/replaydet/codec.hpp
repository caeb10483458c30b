#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "replaydet/audio_io.hpp"

namespace replaydet {

enum class CodecMode { kBuiltinMdct, kExternalCommand };

inline constexpr int kSupportedBitrates[] = {8000, 10000, 12000, 14000, 16000};

struct CodecConfig {
  int bitrate_bps = 16000;
  CodecMode mode = CodecMode::kBuiltinMdct;
  // External mode: encode turns {input} WAV into the {output} package file,
  // decode turns the {input} package file back into an {output} WAV.
  // Both templates may use {bitrate}.
  std::string encode_command;
  std::string decode_command;
  int sample_rate_hz = kCanonicalRate;
  int channels = 1;

  // Throws PreconditionViolation for unsupported bitrates or formats.
  void validate() const;
};

// Upper edge of the coded band for a bitrate.
double cutoff_hz(int bitrate_bps);

struct CompressedPackage {
  std::vector<std::vector<std::uint8_t>> frames;
  CodecConfig config;
  std::size_t original_length = 0;

  std::size_t byte_size() const;
};

// Builtin mode: 20 ms MDCT frames with a sine window and 32 uniform bands.
// Scale factors are 3 dB steps, delta coded across bands. Greedy 2-bit
// water-filling allocates bits inside the bitrate's cutoff; three-level
// bands are packed five values to a byte.
CompressedPackage encode(const AudioClip& clip, const CodecConfig& config);
AudioClip decode(const CompressedPackage& package);
AudioClip roundtrip(const AudioClip& clip, const CodecConfig& config);

// Lossy roundtrip stage of the feature pipeline.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual AudioClip roundtrip(const AudioClip& clip) const = 0;
};

class ConfiguredCodec final : public Codec {
 public:
  explicit ConfiguredCodec(CodecConfig config);
  const CodecConfig& config() const { return config_; }
  AudioClip roundtrip(const AudioClip& clip) const override;

 private:
  CodecConfig config_;
};

// Test hook: identity roundtrip.
class PassThroughCodec final : public Codec {
 public:
  AudioClip roundtrip(const AudioClip& clip) const override { return clip; }
};

// Forward/inverse MDCT of one 2N-sample block (sine window applied inside).
std::vector<double> mdct_forward(std::span<const double> block);
std::vector<double> mdct_inverse(std::span<const double> coeffs);

}  // namespace replaydet
