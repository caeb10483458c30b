#include "replaydet/vocoder.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "replaydet/dsp.hpp"
#include "replaydet/error.hpp"
#include "replaydet/external.hpp"
#include "replaydet/fft.hpp"
#include "replaydet/rng.hpp"

namespace replaydet {
namespace {

constexpr double kMinClipMs = 100.0;
// Among autocorrelation peaks, the shortest lag within this fraction of the
// best one wins. Suppresses subharmonic (octave-down) picks.
constexpr double kOctaveTolerance = 0.85;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void check_length(const AudioClip& clip) {
  const double ms = 1000.0 * clip.duration_seconds();
  if (clip.empty() || ms < kMinClipMs - 1e-9)
    fail(ErrorCode::kClipTooShort,
         "vocoder needs at least 100 ms, got " + std::to_string(ms) + " ms");
}

// Liftered log-magnitude envelope of one windowed frame.
std::vector<double> cepstral_envelope(std::span<const double> frame,
                                      std::size_t fft_size, int num_cepstra) {
  auto& fft = real_fft(fft_size);
  std::vector<std::complex<double>> bins(fft.num_bins());
  fft.forward(frame, bins);
  for (auto& b : bins) b = std::log(std::abs(b) + kLogFloorEpsilon);
  std::vector<double> cep(fft_size);
  fft.inverse(bins, cep);
  const auto keep = static_cast<std::size_t>(num_cepstra);
  for (std::size_t q = keep; q + keep <= fft_size; ++q) cep[q] = 0.0;
  fft.forward(cep, bins);
  std::vector<double> env(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) env[k] = std::exp(bins[k].real());
  return env;
}

// Minimum-phase frequency response whose magnitude is `envelope`.
std::vector<std::complex<double>> minimum_phase_response(
    const Eigen::Ref<const Eigen::RowVectorXd>& envelope,
    std::size_t fft_size) {
  auto& fft = real_fft(fft_size);
  std::vector<std::complex<double>> bins(fft.num_bins());
  std::vector<std::complex<double>> response(fft.num_bins());
  bool all_zero = true;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double m = envelope(static_cast<Eigen::Index>(k));
    if (m > 0.0) all_zero = false;
  }
  if (all_zero) return response;
  for (std::size_t k = 0; k < bins.size(); ++k)
    bins[k] = std::log(std::max(envelope(static_cast<Eigen::Index>(k)), 1e-300));
  std::vector<double> cep(fft_size);
  fft.inverse(bins, cep);
  // Fold the real cepstrum onto positive quefrencies.
  for (std::size_t q = 1; q < fft_size / 2; ++q) cep[q] *= 2.0;
  for (std::size_t q = fft_size / 2 + 1; q < fft_size; ++q) cep[q] = 0.0;
  fft.forward(cep, bins);
  for (std::size_t k = 0; k < bins.size(); ++k) response[k] = std::exp(bins[k]);
  return response;
}

}  // namespace

double estimate_frame_f0(std::span<const double> samples, std::size_t start,
                         const VocoderConfig& config, int sample_rate_hz,
                         double* peak_nac) {
  const auto win = static_cast<std::size_t>(
      std::lround(config.frame_ms * sample_rate_hz / 1000.0));
  const auto min_lag = static_cast<std::size_t>(
      std::ceil(sample_rate_hz / config.f0_max_hz));
  const auto max_lag = static_cast<std::size_t>(
      std::floor(sample_rate_hz / config.f0_min_hz));
  const std::size_t span_len = win + max_lag + 2;
  const std::size_t nfft = next_pow2(span_len);

  std::vector<double> b(span_len, 0.0);
  for (std::size_t i = 0; i < span_len && start + i < samples.size(); ++i)
    b[i] = samples[start + i];
  std::vector<double> a(b.begin(), b.begin() + static_cast<long>(win));

  if (peak_nac) *peak_nac = 0.0;
  double energy_a = 0.0;
  for (double v : a) energy_a += v * v;
  if (energy_a <= 1e-12 * static_cast<double>(win)) return 0.0;

  auto& fft = real_fft(nfft);
  std::vector<std::complex<double>> fa(fft.num_bins()), fb(fft.num_bins());
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] = std::conj(fa[k]) * fb[k];
  std::vector<double> xcorr(nfft);
  fft.inverse(fa, xcorr);

  std::vector<double> prefix(span_len + 1, 0.0);
  for (std::size_t i = 0; i < span_len; ++i)
    prefix[i + 1] = prefix[i] + b[i] * b[i];

  const std::size_t lo = min_lag - 1;
  const std::size_t hi = max_lag + 1;
  std::vector<double> nac(hi + 1, 0.0);
  for (std::size_t lag = lo; lag <= hi; ++lag) {
    const double energy_b = prefix[lag + win] - prefix[lag];
    const double denom = std::sqrt(energy_a * energy_b);
    nac[lag] = denom > 1e-300 ? xcorr[lag] / denom : 0.0;
  }

  double best = 0.0;
  std::vector<std::size_t> peaks;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    if (nac[lag] > nac[lag - 1] && nac[lag] >= nac[lag + 1]) {
      peaks.push_back(lag);
      best = std::max(best, nac[lag]);
    }
  }
  if (peak_nac) *peak_nac = best;
  if (peaks.empty() || best < config.voicing_threshold) return 0.0;

  std::size_t chosen = peaks.front();
  for (std::size_t lag : peaks) {
    if (nac[lag] >= kOctaveTolerance * best) {
      chosen = lag;
      break;
    }
  }
  // Parabolic refinement around the chosen lag.
  const double y0 = nac[chosen - 1], y1 = nac[chosen], y2 = nac[chosen + 1];
  const double curvature = y0 - 2.0 * y1 + y2;
  double offset = 0.0;
  if (curvature < 0.0) offset = std::clamp(0.5 * (y0 - y2) / curvature, -0.5, 0.5);
  const double f0 = sample_rate_hz / (static_cast<double>(chosen) + offset);
  return std::clamp(f0, config.f0_min_hz, config.f0_max_hz);
}

SourceFilterVocoder::SourceFilterVocoder(VocoderConfig config)
    : config_(config) {
  require(config_.f0_min_hz > 0 && config_.f0_max_hz > config_.f0_min_hz,
          "invalid f0 range");
  require(config_.num_cepstra >= 1 && config_.num_cepstra < config_.fft_size / 2,
          "invalid cepstral order");
}

VocoderAnalysis SourceFilterVocoder::analyze(const AudioClip& clip) const {
  check_length(clip);
  const int rate = clip.sample_rate_hz;
  const auto win = static_cast<std::size_t>(
      std::lround(config_.frame_ms * rate / 1000.0));
  const auto hop =
      static_cast<std::size_t>(std::lround(config_.hop_ms * rate / 1000.0));
  require(static_cast<std::size_t>(config_.fft_size) >= win,
          "vocoder FFT shorter than its frame");
  const std::size_t frames = frame_count(clip.size(), win, hop);

  VocoderAnalysis out;
  out.frame_hop_ms = config_.hop_ms;
  out.frame_len_samples = static_cast<int>(win);
  out.hop_samples = static_cast<int>(hop);
  out.fft_size = config_.fft_size;
  out.sample_rate_hz = rate;
  for (double s : clip.samples) out.peak = std::max(out.peak, std::abs(s));
  out.f0_hz.resize(frames);
  out.spectral_envelope.resize(static_cast<Eigen::Index>(frames),
                               config_.fft_size / 2 + 1);

  const auto window = make_window(win, Window::kHann);
  std::vector<double> frame(win);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    out.f0_hz[f] = estimate_frame_f0(clip.samples, start, config_, rate);
    for (std::size_t i = 0; i < win; ++i)
      frame[i] = clip.samples[start + i] * window[i];
    const auto env = cepstral_envelope(
        frame, static_cast<std::size_t>(config_.fft_size), config_.num_cepstra);
    for (std::size_t k = 0; k < env.size(); ++k)
      out.spectral_envelope(static_cast<Eigen::Index>(f),
                            static_cast<Eigen::Index>(k)) = env[k];
  }
  return out;
}

AudioClip SourceFilterVocoder::synthesize(const VocoderAnalysis& analysis,
                                          std::size_t num_samples) const {
  AudioClip out;
  out.sample_rate_hz = analysis.sample_rate_hz;
  out.samples.assign(num_samples, 0.0);
  const std::size_t frames = analysis.num_frames();
  if (frames == 0 || num_samples == 0) return out;
  require(analysis.spectral_envelope.rows() ==
              static_cast<Eigen::Index>(frames),
          "envelope and f0 track disagree in length");
  const auto fft_size = static_cast<std::size_t>(analysis.fft_size);
  require(analysis.spectral_envelope.cols() ==
              static_cast<Eigen::Index>(fft_size / 2 + 1),
          "envelope width does not match FFT size");

  const double rate = analysis.sample_rate_hz;
  const auto hop = static_cast<std::size_t>(analysis.hop_samples);
  const double half_frame = analysis.frame_len_samples / 2.0;
  auto frame_at = [&](double t) {
    const double idx = std::round((t - half_frame) / static_cast<double>(hop));
    return static_cast<std::size_t>(
        std::clamp(idx, 0.0, static_cast<double>(frames - 1)));
  };

  // Excitation: unit-power pulse train when voiced, white noise otherwise.
  Rng rng(config_.seed);
  std::vector<double> excitation(num_samples);
  double phase = 1.0;
  for (std::size_t n = 0; n < num_samples; ++n) {
    const double f0 = analysis.f0_hz[frame_at(static_cast<double>(n))];
    if (f0 > 0.0) {
      phase += f0 / rate;
      if (phase >= 1.0) {
        phase -= std::floor(phase);
        excitation[n] = std::sqrt(rate / f0);
      } else {
        excitation[n] = 0.0;
      }
    } else {
      phase = 1.0;
      excitation[n] = rng.normal();
    }
  }

  // Overlap-add of Hann-windowed blocks, each filtered by the minimum-phase
  // response of its nearest analysis frame.
  const std::size_t block = 2 * hop;
  const auto window = make_window(block, Window::kHann);
  const double gain =
      1.0 / std::sqrt(0.375 * static_cast<double>(analysis.frame_len_samples));
  auto& fft = real_fft(fft_size);
  std::vector<double> seg(block);
  std::vector<std::complex<double>> bins(fft.num_bins());
  std::vector<double> filtered(fft_size);
  std::vector<double> acc(num_samples + fft_size + block, 0.0);
  const std::size_t blocks = num_samples / hop + 2;
  for (std::size_t j = 0; j < blocks; ++j) {
    // Block j spans [j*hop - hop, j*hop + hop) in output time.
    const auto begin = static_cast<std::int64_t>(j * hop) -
                       static_cast<std::int64_t>(hop);
    bool any = false;
    for (std::size_t i = 0; i < block; ++i) {
      const std::int64_t t = begin + static_cast<std::int64_t>(i);
      const double v = (t >= 0 && t < static_cast<std::int64_t>(num_samples))
                           ? excitation[static_cast<std::size_t>(t)]
                           : 0.0;
      seg[i] = v * window[i];
      any = any || v != 0.0;
    }
    if (!any) continue;
    const std::size_t f = frame_at(static_cast<double>(j * hop));
    const auto response =
        minimum_phase_response(analysis.spectral_envelope.row(
                                   static_cast<Eigen::Index>(f)),
                               fft_size);
    fft.forward(seg, bins);
    for (std::size_t k = 0; k < bins.size(); ++k) bins[k] *= response[k] * gain;
    fft.inverse(bins, filtered);
    for (std::size_t i = 0; i < fft_size; ++i) {
      const std::int64_t t = begin + static_cast<std::int64_t>(i);
      if (t >= 0) acc[static_cast<std::size_t>(t)] += filtered[i];
    }
  }

  double peak = 0.0;
  for (std::size_t n = 0; n < num_samples; ++n) peak = std::max(peak, std::abs(acc[n]));
  const double scale = peak > 0.0 ? analysis.peak / peak : 0.0;
  for (std::size_t n = 0; n < num_samples; ++n) out.samples[n] = acc[n] * scale;
  return out;
}

AudioClip SourceFilterVocoder::resynthesize(const AudioClip& clip) const {
  return synthesize(analyze(clip), clip.size());
}

ExternalVocoder::ExternalVocoder(std::string command_template)
    : command_template_(std::move(command_template)) {
  require(!command_template_.empty(), "external vocoder command is empty");
}

AudioClip ExternalVocoder::resynthesize(const AudioClip& clip) const {
  check_length(clip);
  TempDir dir;
  const auto in_path = dir.path() / "in.wav";
  const auto out_path = dir.path() / "out.wav";
  save_wav(clip, in_path);
  const std::string cmd = expand_command(
      command_template_,
      {{"input", in_path.string()}, {"output", out_path.string()}});
  const int status = run_shell(cmd);
  if (status != 0)
    fail(ErrorCode::kExternalVocoderFailure,
         "command exited with status " + std::to_string(status));
  AudioClip out;
  try {
    out = load_wav(out_path);
  } catch (const Error& e) {
    fail(ErrorCode::kExternalVocoderFailure, e.what());
  }
  const auto tolerance = static_cast<std::size_t>(clip.sample_rate_hz / 100);
  const std::size_t diff = out.size() > clip.size() ? out.size() - clip.size()
                                                    : clip.size() - out.size();
  if (diff > tolerance)
    fail(ErrorCode::kExternalVocoderFailure,
         "output length " + std::to_string(out.size()) + " vs input " +
             std::to_string(clip.size()));
  out.samples.resize(clip.size(), 0.0);
  return out;
}

}  // namespace replaydet
