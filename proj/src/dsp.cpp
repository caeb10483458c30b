#include "replaydet/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "replaydet/error.hpp"
#include "replaydet/fft.hpp"

namespace replaydet {

std::size_t frame_count(std::size_t num_samples, std::size_t frame_len,
                        std::size_t hop) {
  if (num_samples < frame_len) return 0;
  return 1 + (num_samples - frame_len) / hop;
}

std::vector<double> make_window(std::size_t length, Window window) {
  std::vector<double> w(length, 1.0);
  if (window == Window::kHann) {
    for (std::size_t i = 0; i < length; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(i) /
                                  static_cast<double>(length));
  }
  return w;
}

Eigen::MatrixXd stft_magnitude(std::span<const double> samples,
                               std::size_t frame_len, std::size_t hop,
                               std::size_t fft_size, Window window) {
  require(frame_len > 0 && hop > 0, "frame and hop must be positive");
  require(fft_size >= frame_len, "FFT size must cover the frame length");
  const std::size_t frames = frame_count(samples.size(), frame_len, hop);
  if (frames == 0)
    fail(ErrorCode::kClipTooShort,
         std::to_string(samples.size()) + " samples, frame needs " +
             std::to_string(frame_len));

  const auto win = make_window(frame_len, window);
  auto& fft = real_fft(fft_size);
  std::vector<double> buf(frame_len);
  std::vector<std::complex<double>> bins(fft.num_bins());
  Eigen::MatrixXd mag(static_cast<Eigen::Index>(frames),
                      static_cast<Eigen::Index>(fft.num_bins()));
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < frame_len; ++i)
      buf[i] = samples[start + i] * win[i];
    fft.forward(buf, bins);
    for (std::size_t k = 0; k < bins.size(); ++k)
      mag(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) =
          std::abs(bins[k]);
  }
  return mag;
}

Spectrogram stft_log_spectrogram(const AudioClip& clip, double frame_ms,
                                 double hop_ms, int fft_size) {
  require(frame_ms > 0 && hop_ms > 0, "frame and hop must be positive");
  const auto frame_len = static_cast<std::size_t>(
      std::lround(frame_ms * clip.sample_rate_hz / 1000.0));
  const auto hop = static_cast<std::size_t>(
      std::lround(hop_ms * clip.sample_rate_hz / 1000.0));
  require(fft_size > 0 && static_cast<std::size_t>(fft_size) >= frame_len,
          "FFT size must be >= frame length in samples");

  const Eigen::MatrixXd mag =
      stft_magnitude(clip.samples, frame_len, hop,
                     static_cast<std::size_t>(fft_size), Window::kHann);
  Spectrogram spec;
  spec.frame_len_samples = static_cast<int>(frame_len);
  spec.hop_samples = static_cast<int>(hop);
  spec.fft_bins = fft_size;
  spec.scale = SpectrumScale::kLogLinear;
  // Scalar std::log keeps the silence floor bit-exact at log(eps).
  spec.values = mag.leftCols(fft_size / 2).unaryExpr(
      [](double m) { return std::log(m + kLogFloorEpsilon); });
  return spec;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Eigen::MatrixXd mel_filterbank(int num_mel, int num_bins, int fft_size,
                               int sample_rate_hz, double max_hz) {
  const double mel_max = hz_to_mel(max_hz);
  std::vector<double> edges(static_cast<std::size_t>(num_mel) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) /
                         static_cast<double>(num_mel + 1));

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(num_mel, num_bins);
  const double bin_hz = static_cast<double>(sample_rate_hz) / fft_size;
  for (int m = 0; m < num_mel; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m) + 1];
    const double hi = edges[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = k * bin_hz;
      if (f > lo && f < hi)
        w(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return w;
}

Spectrogram mel_project(const Spectrogram& spec, int num_mel,
                        int sample_rate_hz) {
  require(spec.scale == SpectrumScale::kLogLinear,
          "mel projection needs a log-linear spectrogram");
  if (num_mel < 2 || num_mel > spec.num_bins())
    fail(ErrorCode::kInvalidNumMel, std::to_string(num_mel));
  const Eigen::MatrixXd fb =
      mel_filterbank(num_mel, static_cast<int>(spec.num_bins()),
                     spec.fft_bins, sample_rate_hz);
  // Undo the log floor so silence maps to exactly zero energy.
  const double floor = Spectrogram::floor_value();
  const Eigen::MatrixXd linear = spec.values.unaryExpr([floor](double v) {
    return v <= floor ? 0.0 : std::max(std::exp(v) - kLogFloorEpsilon, 0.0);
  });
  Spectrogram out = spec;
  out.scale = SpectrumScale::kLogMel;
  out.num_mel = num_mel;
  out.values = (linear * fb.transpose()).unaryExpr(
      [](double m) { return std::log(m + kLogFloorEpsilon); });
  return out;
}

AudioClip pre_emphasis(const AudioClip& clip, double coeff) {
  require(coeff >= 0.0 && coeff < 1.0, "emphasis coefficient must be in [0, 1)");
  AudioClip out = clip;
  for (std::size_t n = 1; n < clip.samples.size(); ++n)
    out.samples[n] = clip.samples[n] - coeff * clip.samples[n - 1];
  return out;
}

AudioClip de_emphasis(const AudioClip& clip, double coeff) {
  require(coeff >= 0.0 && coeff < 1.0, "emphasis coefficient must be in [0, 1)");
  AudioClip out = clip;
  for (std::size_t n = 1; n < out.samples.size(); ++n)
    out.samples[n] = clip.samples[n] + coeff * out.samples[n - 1];
  return out;
}

Eigen::VectorXd temporal_mean(const Spectrogram& spec) {
  return spec.values.colwise().mean().transpose();
}

double log_spectral_distance(const Spectrogram& a, const Spectrogram& b) {
  require(a.values.rows() == b.values.rows() &&
              a.values.cols() == b.values.cols(),
          "spectrogram shapes differ");
  return (a.values - b.values).cwiseAbs().mean();
}

}  // namespace replaydet
