#include "replaydet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "replaydet/error.hpp"
#include "replaydet/fft.hpp"
#include "replaydet/rng.hpp"

namespace replaydet {
namespace {

constexpr std::pair<AugmentKind, std::string_view> kKindNames[] = {
    {AugmentKind::kFreqMask, "freq_mask"},
    {AugmentKind::kTimeMask, "time_mask"},
    {AugmentKind::kAddNoise, "add_noise"},
    {AugmentKind::kAddReverb, "add_reverb"},
    {AugmentKind::kAdjustSpeed, "adjust_speed"},
    {AugmentKind::kPreEmphasis, "pre_emphasis"},
    {AugmentKind::kDeEmphasis, "de_emphasis"},
};

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double peak_of(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

}  // namespace

std::string_view augment_kind_name(AugmentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<AugmentKind> parse_augment_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

void AugmentSpec::validate() const {
  require(mask_max_len >= 0, "mask length must be non-negative");
  require(mask_max_prop >= 0.0 && mask_max_prop <= 1.0,
          "mask proportion must be in [0, 1]");
  require(mask_count >= 1, "mask count must be positive");
  require(std::isfinite(snr_db), "SNR must be finite");
  require(speed_lo >= 0.5 && speed_lo <= speed_hi && speed_hi <= 2.0,
          "speed range must satisfy 0.5 <= lo <= hi <= 2");
  require(emph_coeff >= 0.0 && emph_coeff < 1.0,
          "emphasis coefficient must be in [0, 1)");
}

MaskDraw draw_freq_mask(const Spectrogram& spec, int max_len,
                        std::uint64_t seed) {
  const auto bins = static_cast<int>(spec.num_bins());
  require(max_len >= 0 && max_len <= bins, "mask length exceeds bin count");
  Rng rng(seed);
  MaskDraw m;
  m.width = static_cast<int>(rng.between(0, max_len));
  m.start = static_cast<int>(rng.between(0, bins - m.width));
  return m;
}

MaskDraw draw_time_mask(const Spectrogram& spec, int max_len, double max_prop,
                        std::uint64_t seed) {
  const auto frames = static_cast<int>(spec.num_frames());
  require(max_len >= 0, "mask length must be non-negative");
  require(max_prop >= 0.0 && max_prop <= 1.0, "mask proportion out of range");
  const int cap = std::min(
      max_len, static_cast<int>(std::floor(max_prop * frames + 1e-9)));
  Rng rng(seed);
  MaskDraw m;
  m.width = static_cast<int>(rng.between(0, cap));
  m.start = static_cast<int>(rng.between(0, frames - m.width));
  return m;
}

Spectrogram apply_freq_mask(const Spectrogram& spec, MaskDraw mask) {
  require(mask.start >= 0 && mask.width >= 0 &&
              mask.start + mask.width <= spec.num_bins(),
          "frequency mask out of range");
  Spectrogram out = spec;
  out.values.middleCols(mask.start, mask.width).setConstant(
      Spectrogram::floor_value());
  return out;
}

Spectrogram apply_time_mask(const Spectrogram& spec, MaskDraw mask) {
  require(mask.start >= 0 && mask.width >= 0 &&
              mask.start + mask.width <= spec.num_frames(),
          "time mask out of range");
  Spectrogram out = spec;
  out.values.middleRows(mask.start, mask.width).setConstant(
      Spectrogram::floor_value());
  return out;
}

Spectrogram freq_mask(const Spectrogram& spec, int max_len, std::uint64_t seed,
                      MaskDraw* drawn) {
  const MaskDraw m = draw_freq_mask(spec, max_len, seed);
  if (drawn) *drawn = m;
  return apply_freq_mask(spec, m);
}

Spectrogram time_mask(const Spectrogram& spec, int max_len, double max_prop,
                      std::uint64_t seed, MaskDraw* drawn) {
  const MaskDraw m = draw_time_mask(spec, max_len, max_prop, seed);
  if (drawn) *drawn = m;
  return apply_time_mask(spec, m);
}

AudioClip add_noise(const AudioClip& clip, const AudioClip& noise,
                    double snr_db, std::uint64_t seed, AudioClip* unclipped) {
  require(!clip.empty(), "clip is empty");
  require(std::isfinite(snr_db), "SNR must be finite");
  if (noise.empty() || mean_power(noise.samples) <= 0.0)
    fail(ErrorCode::kSilentNoiseSource, "noise source has zero power");
  const double signal_power = mean_power(clip.samples);
  if (signal_power <= 0.0)
    fail(ErrorCode::kSilentSignal, "SNR is undefined for a silent clip");

  Rng rng(seed);
  const std::size_t offset = rng.below(noise.size());
  std::vector<double> segment(clip.size());
  for (std::size_t i = 0; i < segment.size(); ++i)
    segment[i] = noise.samples[(offset + i) % noise.size()];
  const double segment_power = mean_power(segment);
  if (segment_power <= 0.0)
    fail(ErrorCode::kSilentNoiseSource, "selected noise segment is silent");
  const double gain =
      std::sqrt(signal_power / (segment_power * std::pow(10.0, snr_db / 10.0)));

  AudioClip out = clip;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.samples[i] += gain * segment[i];
  if (unclipped) *unclipped = out;
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

std::vector<double> convolve(std::span<const double> a,
                             std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  if (std::min(a.size(), b.size()) <= 64) {
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
  }
  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  RealFft fft(n);
  std::vector<std::complex<double>> fa(fft.num_bins()), fb(fft.num_bins());
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> full(n);
  fft.inverse(fa, full);
  full.resize(out_len);
  return full;
}

AudioClip add_reverb(const AudioClip& clip, const AudioClip& rir) {
  require(!clip.empty() && !rir.empty(), "clip and impulse response must be non-empty");
  if (rir.size() >= clip.size())
    fail(ErrorCode::kRirTooLong, "impulse response (" + std::to_string(rir.size()) +
                                     ") must be shorter than the clip (" +
                                     std::to_string(clip.size()) + ")");
  AudioClip out = clip;
  auto wet = convolve(clip.samples, rir.samples);
  wet.resize(clip.size());
  const double target = peak_of(clip.samples);
  const double current = peak_of(wet);
  const double scale = current > 0.0 ? target / current : 0.0;
  for (std::size_t i = 0; i < wet.size(); ++i) out.samples[i] = wet[i] * scale;
  return out;
}

AudioClip apply_speed(const AudioClip& clip, double factor) {
  require(factor >= 0.5 && factor <= 2.0, "speed factor must be in [0.5, 2]");
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  if (factor == 1.0) {
    out.samples = clip.samples;
    return out;
  }
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.size()) / factor));
  out.samples = resample_ratio(clip.samples, 1.0 / factor, out_len);
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

AudioClip adjust_speed(const AudioClip& clip, double lo, double hi,
                       std::uint64_t seed, double* factor) {
  require(lo >= 0.5 && lo <= hi && hi <= 2.0,
          "speed range must satisfy 0.5 <= lo <= hi <= 2");
  Rng rng(seed);
  const double f = lo == hi ? lo : rng.uniform(lo, hi);
  if (factor) *factor = f;
  return apply_speed(clip, f);
}

}  // namespace replaydet
