#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "replaydet/audio_io.hpp"

namespace replaydet {

inline constexpr double kLogFloorEpsilon = 1e-10;

enum class SpectrumScale { kLogLinear, kLogMel };
enum class Window { kHann, kRectangular };

// Time x frequency matrix of natural-log magnitudes.
struct Spectrogram {
  Eigen::MatrixXd values;  // num_frames x num_bins
  int frame_len_samples = 0;
  int hop_samples = 0;
  int fft_bins = 0;  // FFT size
  SpectrumScale scale = SpectrumScale::kLogLinear;
  int num_mel = 0;

  Eigen::Index num_frames() const { return values.rows(); }
  Eigen::Index num_bins() const { return values.cols(); }
  static double floor_value() { return std::log(kLogFloorEpsilon); }
};

struct StftConfig {
  double frame_ms = 50.0;
  double hop_ms = 25.0;
  int fft_size = 1024;
};

std::size_t frame_count(std::size_t num_samples, std::size_t frame_len,
                        std::size_t hop);

// Periodic window of the given length.
std::vector<double> make_window(std::size_t length, Window window);

// Linear STFT magnitudes, all fft_size/2 + 1 bins, frames x bins.
Eigen::MatrixXd stft_magnitude(std::span<const double> samples,
                               std::size_t frame_len, std::size_t hop,
                               std::size_t fft_size,
                               Window window = Window::kHann);

// Hann-windowed log(|X| + 1e-10) spectrogram. The Nyquist bin is dropped,
// leaving fft_size / 2 bins per frame.
Spectrogram stft_log_spectrogram(const AudioClip& clip, double frame_ms,
                                 double hop_ms, int fft_size);

inline Spectrogram stft_log_spectrogram(const AudioClip& clip,
                                        const StftConfig& cfg) {
  return stft_log_spectrogram(clip, cfg.frame_ms, cfg.hop_ms, cfg.fft_size);
}

// Triangular HTK-mel filterbank weights (num_mel x num_bins) covering
// 0..max_hz, for bins spaced sample_rate / fft_size apart.
Eigen::MatrixXd mel_filterbank(int num_mel, int num_bins, int fft_size,
                               int sample_rate_hz, double max_hz = 8000.0);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

Spectrogram mel_project(const Spectrogram& spec, int num_mel,
                        int sample_rate_hz = kCanonicalRate);

// y[n] = x[n] - coeff * x[n-1]
AudioClip pre_emphasis(const AudioClip& clip, double coeff);
// y[n] = x[n] + coeff * y[n-1]
AudioClip de_emphasis(const AudioClip& clip, double coeff);

// Mean over frames.
Eigen::VectorXd temporal_mean(const Spectrogram& spec);

// Mean absolute difference of two log spectrograms of equal shape.
double log_spectral_distance(const Spectrogram& a, const Spectrogram& b);

}  // namespace replaydet
