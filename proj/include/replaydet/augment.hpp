#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "replaydet/audio_io.hpp"
#include "replaydet/dsp.hpp"

namespace replaydet {

enum class AugmentKind {
  kFreqMask,
  kTimeMask,
  kAddNoise,
  kAddReverb,
  kAdjustSpeed,
  kPreEmphasis,
  kDeEmphasis,
};

std::string_view augment_kind_name(AugmentKind kind);
std::optional<AugmentKind> parse_augment_kind(std::string_view name);

struct AugmentSpec {
  AugmentKind kind = AugmentKind::kFreqMask;
  int mask_max_len = 80;
  double mask_max_prop = 1.0;
  int mask_count = 1;
  double snr_db = 10.0;
  double speed_lo = 0.9;
  double speed_hi = 1.1;
  double emph_coeff = 0.97;
  std::uint64_t seed = 0;

  void validate() const;
  bool is_spectral() const {
    return kind == AugmentKind::kFreqMask || kind == AugmentKind::kTimeMask;
  }
};

// A contiguous masked band [start, start + width).
struct MaskDraw {
  int start = 0;
  int width = 0;
};

MaskDraw draw_freq_mask(const Spectrogram& spec, int max_len, std::uint64_t seed);
MaskDraw draw_time_mask(const Spectrogram& spec, int max_len, double max_prop,
                        std::uint64_t seed);

// Sets the masked cells to the spectrogram floor value.
Spectrogram apply_freq_mask(const Spectrogram& spec, MaskDraw mask);
Spectrogram apply_time_mask(const Spectrogram& spec, MaskDraw mask);

Spectrogram freq_mask(const Spectrogram& spec, int max_len, std::uint64_t seed,
                      MaskDraw* drawn = nullptr);
Spectrogram time_mask(const Spectrogram& spec, int max_len, double max_prop,
                      std::uint64_t seed, MaskDraw* drawn = nullptr);

// Mixes a randomly cropped (looped if short) noise segment at the given SNR.
// `unclipped`, if given, receives the mixture before clipping to [-1, 1].
AudioClip add_noise(const AudioClip& clip, const AudioClip& noise,
                    double snr_db, std::uint64_t seed,
                    AudioClip* unclipped = nullptr);

// Convolves with the impulse response, truncates to the clip length and
// restores the clip's peak.
AudioClip add_reverb(const AudioClip& clip, const AudioClip& rir);

// Resampling speed change by `factor` (> 1 is faster and higher-pitched).
AudioClip apply_speed(const AudioClip& clip, double factor);

// Speed change with factor ~ Uniform[lo, hi].
AudioClip adjust_speed(const AudioClip& clip, double lo, double hi,
                       std::uint64_t seed, double* factor = nullptr);

// Full linear convolution of a and b.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

}  // namespace replaydet
