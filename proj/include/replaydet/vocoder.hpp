#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "replaydet/audio_io.hpp"

namespace replaydet {

struct VocoderConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double f0_min_hz = 50.0;
  double f0_max_hz = 500.0;
  double voicing_threshold = 0.5;  // peak normalized autocorrelation
  int num_cepstra = 48;
  int fft_size = 1024;
  std::uint64_t seed = 0;
};

// Frame-level source/filter parameters.
struct VocoderAnalysis {
  std::vector<double> f0_hz;           // 0 = unvoiced
  Eigen::MatrixXd spectral_envelope;   // frames x (fft_size / 2 + 1), linear
  double frame_hop_ms = 10.0;
  int frame_len_samples = 0;
  int hop_samples = 0;
  int fft_size = 1024;
  int sample_rate_hz = kCanonicalRate;
  double peak = 0.0;  // input peak magnitude, restored after synthesis

  std::size_t num_frames() const { return f0_hz.size(); }
};

// Analysis/synthesis stage of the feature pipeline.
class Vocoder {
 public:
  virtual ~Vocoder() = default;
  // Output has the same length and rate as the input.
  virtual AudioClip resynthesize(const AudioClip& clip) const = 0;
};

// Autocorrelation pitch + cepstral envelope + pulse/noise excitation.
class SourceFilterVocoder final : public Vocoder {
 public:
  explicit SourceFilterVocoder(VocoderConfig config = {});

  const VocoderConfig& config() const { return config_; }

  VocoderAnalysis analyze(const AudioClip& clip) const;
  AudioClip synthesize(const VocoderAnalysis& analysis,
                       std::size_t num_samples) const;
  AudioClip resynthesize(const AudioClip& clip) const override;

 private:
  VocoderConfig config_;
};

// Delegates to a command line with {input} and {output} WAV placeholders.
class ExternalVocoder final : public Vocoder {
 public:
  explicit ExternalVocoder(std::string command_template);
  AudioClip resynthesize(const AudioClip& clip) const override;

 private:
  std::string command_template_;
};

// Returns its input unchanged. Test hook for the feature pipeline.
class PassThroughVocoder final : public Vocoder {
 public:
  AudioClip resynthesize(const AudioClip& clip) const override { return clip; }
};

// Normalized autocorrelation pitch for one frame starting at `start`.
// Returns 0 when the best peak is below the voicing threshold.
double estimate_frame_f0(std::span<const double> samples, std::size_t start,
                         const VocoderConfig& config, int sample_rate_hz,
                         double* peak_nac = nullptr);

}  // namespace replaydet
