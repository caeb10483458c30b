#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace replaydet {

inline constexpr int kCanonicalRate = 16000;
inline constexpr double kMaxClipSeconds = 30.0;

// Mono PCM signal. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Reads a RIFF/WAVE file (PCM16 or float32, mono or stereo) and returns a
// canonical clip: mono, 16 kHz, |x| <= 1, at most 30 s long.
AudioClip load_wav(const std::filesystem::path& path);

// Parses WAV bytes already in memory; same canonicalization as load_wav.
AudioClip parse_wav(std::span<const unsigned char> bytes);

// Writes PCM16 mono. Empty clips are rejected.
void save_wav(const AudioClip& clip, const std::filesystem::path& path);

std::vector<unsigned char> encode_wav_pcm16(const AudioClip& clip);

// Band-limited resampling with a Kaiser-windowed sinc kernel (beta 8.6,
// 64 taps at the lower of the two rates). Output length is
// round(n * target / source).
AudioClip resample(const AudioClip& clip, int target_rate_hz);

// Resamples by an arbitrary ratio (output rate / input rate) into exactly
// out_len samples. Used for speed perturbation.
std::vector<double> resample_ratio(std::span<const double> input, double ratio,
                                   std::size_t out_len);

}  // namespace replaydet
