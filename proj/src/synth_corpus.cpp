#include "replaydet/synth_corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "replaydet/augment.hpp"
#include "replaydet/error.hpp"
#include "replaydet/fft.hpp"
#include "replaydet/rng.hpp"

namespace replaydet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vowel {
  double f1, f2, f3;
};

// Average adult formant targets.
constexpr std::array<Vowel, 8> kVowels = {{
    {730, 1090, 2440},
    {270, 2290, 3010},
    {300, 870, 2240},
    {530, 1840, 2480},
    {570, 840, 2410},
    {660, 1720, 2410},
    {520, 1190, 2390},
    {390, 1990, 2550},
}};

struct Target {
  std::size_t at;  // sample index where the target is reached
  double f0, f[3], amp;
};

// Two-pole resonator with unity gain at DC.
struct Resonator {
  double y1 = 0.0, y2 = 0.0;
  double step(double x, double freq, double bw, double fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    const double b = 2.0 * r * std::cos(kTwoPi * freq / fs);
    const double c = -r * r;
    const double y = (1.0 - b - c) * x + b * y1 + c * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

double peak_abs(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

void lowpass_in_place(std::vector<double>& x, double cutoff_hz, int fs) {
  const double edge = cutoff_hz * 1.15;
  std::size_t n = 1;
  while (n < 2 * x.size()) n <<= 1;
  RealFft fft(n);
  std::vector<std::complex<double>> spec(fft.num_bins());
  fft.forward(x, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    double g = 1.0;
    if (f >= edge) g = 0.0;
    else if (f > cutoff_hz)
      g = 0.5 * (1.0 + std::cos(std::numbers::pi * (f - cutoff_hz) / (edge - cutoff_hz)));
    spec[k] *= g;
  }
  std::vector<double> out(n);
  fft.inverse(spec, out);
  std::copy_n(out.begin(), x.size(), x.begin());
}

Label parse_label(std::string_view s, std::size_t line_no) {
  if (s == "bonafide") return Label::kBonafide;
  if (s == "spoof") return Label::kSpoof;
  fail(ErrorCode::kMalformedLine,
       "line " + std::to_string(line_no) + ": unknown label '" + std::string(s) + "'");
}

}  // namespace

AudioClip generate_bonafide(std::uint64_t seed, double duration_s,
                            const BonafideConfig& config) {
  require(duration_s >= 1.0 && duration_s <= 10.0, "duration must be in [1, 10] s");
  require(config.f0_min_hz > 0.0 && config.f0_min_hz < config.f0_max_hz,
          "F0 range must be increasing and positive");
  require(config.aspiration_min >= 0.0 && config.aspiration_min <= config.aspiration_max,
          "aspiration range must be non-negative and increasing");
  const int fs = kCanonicalRate;
  const auto n = static_cast<std::size_t>(std::lround(duration_s * fs));
  Rng rng(seed);

  const double lo = config.f0_min_hz, hi = config.f0_max_hz;
  const double base_f0 = rng.uniform(lo * 1.15, std::max(lo * 1.15, hi / 1.3));
  std::vector<Target> targets;
  for (std::size_t at = 0;;) {
    const Vowel& v = kVowels[rng.below(kVowels.size())];
    Target t;
    t.at = at;
    t.f0 = std::clamp(base_f0 * rng.uniform(0.82, 1.22), lo, hi);
    t.f[0] = v.f1 * rng.uniform(0.9, 1.1);
    t.f[1] = v.f2 * rng.uniform(0.9, 1.1);
    t.f[2] = v.f3 * rng.uniform(0.92, 1.08);
    t.amp = rng.uniform(0.45, 1.0);
    targets.push_back(t);
    if (at >= n) break;
    at += static_cast<std::size_t>(rng.uniform(0.12, 0.35) * fs);
  }
  const double bw[3] = {rng.uniform(50, 80), rng.uniform(70, 110), rng.uniform(100, 160)};

  std::vector<double> out(n), envelope(n);
  Resonator res[3];
  double phase = 0.0, g1 = 0.0, g2 = 0.0, prev_src = 0.0;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 2 < targets.size() && targets[seg + 1].at <= i) ++seg;
    const Target& a = targets[seg];
    const Target& b = targets[seg + 1];
    const double w = std::clamp(static_cast<double>(i - a.at) /
                                    static_cast<double>(std::max<std::size_t>(1, b.at - a.at)),
                                0.0, 1.0);
    const double f0 = a.f0 + w * (b.f0 - a.f0);
    const double amp = a.amp + w * (b.amp - a.amp);

    phase += f0 / fs;
    double pulse = 0.0;
    if (phase >= 1.0) {
      phase -= 1.0;
      pulse = 1.0;
    }
    // Glottal shaping (two real poles) then lip radiation (first difference).
    g1 = 0.94 * g1 + pulse;
    g2 = 0.94 * g2 + g1;
    double src = g2 - prev_src;
    prev_src = g2;
    src += 0.01 * rng.normal();

    double y = src * amp;
    for (int k = 0; k < 3; ++k)
      y = res[k].step(y, a.f[k] + w * (b.f[k] - a.f[k]), bw[k], fs);
    out[i] = y;
    envelope[i] = amp;
  }

  // Aspiration: differenced white noise following the voicing envelope.
  // The resonator cascade alone leaves almost nothing above 4 kHz.
  if (config.aspiration_max > 0.0) {
    double voiced_power = 0.0;
    for (double v : out) voiced_power += v * v;
    voiced_power /= static_cast<double>(n);
    const double breath =
        rng.uniform(config.aspiration_min, config.aspiration_max) *
        std::sqrt(voiced_power / 2.0);
    double prev_noise = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = rng.normal();
      out[i] += breath * envelope[i] * (e - prev_noise);
      prev_noise = e;
    }
  }

  // 20 ms fades at both ends.
  const std::size_t fade = std::min<std::size_t>(n / 2, fs / 50);
  for (std::size_t i = 0; i < fade; ++i) {
    const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / fade);
    out[i] *= g;
    out[n - 1 - i] *= g;
  }
  const double p = peak_abs(out);
  if (p > 0.0)
    for (double& v : out) v *= config.peak / p;
  AudioClip clip;
  clip.samples = std::move(out);
  clip.sample_rate_hz = fs;
  return clip;
}

void ReplayChannelConfig::validate() const {
  require(rir_t60_s >= 0.0 && rir_t60_s <= 2.0, "T60 must be in [0, 2] s");
  require(speaker_nonlinearity >= 0.0 && speaker_nonlinearity <= 1.0 / 3.0,
          "soft-clip coefficient must be in [0, 1/3]");
  require(mic_bandlimit_hz > 0.0, "band limit must be positive");
  require(std::isfinite(noise_snr_db), "SNR must be finite");
}

ReplayChannelConfig random_replay_channel(std::uint64_t seed) {
  Rng rng(seed);
  ReplayChannelConfig c;
  c.rir_t60_s = rng.uniform(0.1, 0.8);
  c.speaker_nonlinearity = rng.uniform(0.0, 0.3);
  c.mic_bandlimit_hz = rng.uniform(3400.0, 7000.0);
  c.noise_snr_db = rng.uniform(15.0, 40.0);
  c.seed = seed;
  return c;
}

std::vector<double> make_rir(double t60_s, int fs, std::uint64_t seed,
                             std::size_t max_len) {
  require(max_len >= 1, "RIR needs at least one tap");
  if (t60_s <= 0.0) return {1.0};
  const auto len = std::min<std::size_t>(
      max_len, static_cast<std::size_t>(std::lround(t60_s * fs)));
  std::vector<double> h(std::max<std::size_t>(len, 1), 0.0);
  h[0] = 1.0;
  Rng rng(mix_seed(seed, 0x515));
  const double decay = 6.907755 / (t60_s * fs);  // 60 dB at t60
  const auto onset = static_cast<std::size_t>(0.002 * fs);
  for (std::size_t i = std::max<std::size_t>(onset, 1); i < h.size(); ++i)
    h[i] = 0.25 * rng.normal() * std::exp(-decay * static_cast<double>(i));
  return h;
}

AudioClip apply_replay_channel(const AudioClip& clip,
                               const ReplayChannelConfig& config) {
  config.validate();
  require(!clip.empty(), "clip is empty");
  const double in_peak = peak_abs(clip.samples);
  if (in_peak == 0.0) return clip;
  const std::size_t n = clip.size();

  std::vector<double> x(clip.samples);
  if (config.speaker_nonlinearity > 0.0)
    for (double& v : x) {
      const double u = v / in_peak;
      v = (u - config.speaker_nonlinearity * u * u * u) * in_peak;
    }

  const auto rir = make_rir(config.rir_t60_s, clip.sample_rate_hz, config.seed,
                            n > 1 ? n - 1 : 1);
  if (rir.size() > 1) {
    x = convolve(x, rir);
    x.resize(n);
  }

  if (config.mic_bandlimit_hz < 0.5 * clip.sample_rate_hz)
    lowpass_in_place(x, config.mic_bandlimit_hz, clip.sample_rate_hz);

  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(n);
  if (power > 0.0) {
    Rng rng(mix_seed(config.seed, 0x401));
    std::vector<double> noise(n);
    double npow = 0.0;
    for (double& v : noise) {
      v = rng.normal();
      npow += v * v;
    }
    npow /= static_cast<double>(n);
    const double gain = std::sqrt(power / (npow * std::pow(10.0, config.noise_snr_db / 10.0)));
    for (std::size_t i = 0; i < n; ++i) x[i] += gain * noise[i];
  }

  const double p = peak_abs(x);
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples = std::move(x);
  if (p > 0.0)
    for (double& v : out.samples) v *= in_peak / p;
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, '\t');) f.push_back(tok);
    if (f.size() != 3 || f[0].empty() || f[1].empty())
      fail(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) +
                                          ": expected utt_id<TAB>path<TAB>label");
    ManifestEntry e;
    e.utt_id = f[0];
    e.path = f[1];
    if (e.path.is_relative()) e.path = base / e.path;
    e.label = parse_label(f[2], line_no);
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot open " + path.string());
  for (const auto& e : entries)
    out << e.utt_id << '\t' << e.path.generic_string() << '\t'
        << label_name(e.label) << '\n';
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

void write_augment_sources(const std::filesystem::path& out_dir,
                           std::uint64_t seed, int count) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "noise", ec);
  std::filesystem::create_directories(out_dir / "rir", ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create augmentation directories");
  for (int k = 0; k < count; ++k) {
    Rng rng(mix_seed(seed, 0x401E + static_cast<std::uint64_t>(k)));
    // One-pole filtered white noise; the pole sets the spectral color.
    const double pole = rng.uniform(0.0, 0.95);
    AudioClip noise;
    noise.samples.resize(3 * kCanonicalRate);
    double state = 0.0;
    for (double& v : noise.samples) {
      state = pole * state + rng.normal();
      v = state;
    }
    const double p = peak_abs(noise.samples);
    for (double& v : noise.samples) v *= 0.5 / p;
    char name[32];
    std::snprintf(name, sizeof name, "noise_%02d.wav", k);
    save_wav(noise, out_dir / "noise" / name);

    AudioClip rir;
    rir.samples = make_rir(rng.uniform(0.2, 0.6), kCanonicalRate, rng.next_u64(),
                           kCanonicalRate / 2);
    const double rp = peak_abs(rir.samples);
    for (double& v : rir.samples) v *= 0.9 / rp;
    std::snprintf(name, sizeof name, "rir_%02d.wav", k);
    save_wav(rir, out_dir / "rir" / name);
  }
}

CorpusResult build_corpus(const CorpusConfig& config,
                          const std::filesystem::path& out_dir) {
  require(config.n_bonafide >= 0 && config.n_spoof >= 0, "counts must be non-negative");
  require(config.train_fraction >= 0.0 && config.train_fraction <= 1.0,
          "train fraction must be in [0, 1]");
  require(config.min_duration_s >= 1.0 && config.min_duration_s <= config.max_duration_s &&
              config.max_duration_s <= 10.0,
          "durations must satisfy 1 <= min <= max <= 10");
  require(config.channels_per_split >= 1, "each split needs a channel pool");

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + (out_dir / "wav").string());

  CorpusResult result;
  for (int k = 0; k < config.channels_per_split; ++k) {
    result.train_channels.push_back(
        random_replay_channel(mix_seed(config.seed, 0x10000 + static_cast<std::uint64_t>(k))));
    ReplayChannelConfig e;
    std::uint64_t salt = 0x20000 + static_cast<std::uint64_t>(k);
    do {
      e = random_replay_channel(mix_seed(config.seed, salt));
      salt += 0x100000;
    } while (std::find(result.train_channels.begin(), result.train_channels.end(), e) !=
             result.train_channels.end());
    result.eval_channels.push_back(e);
  }

  const int train_b = static_cast<int>(std::lround(config.n_bonafide * config.train_fraction));
  const int train_s = static_cast<int>(std::lround(config.n_spoof * config.train_fraction));
  std::vector<ManifestEntry> all, train, eval;
  std::ofstream keys;

  auto emit = [&](bool is_train, Label label, int ordinal) {
    const std::string split = is_train ? "train" : "eval";
    auto& bucket = is_train ? train : eval;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%04d", split.c_str(), static_cast<int>(bucket.size()) + 1);
    const std::uint64_t tag = (is_train ? 1ull : 2ull) << 40 |
                              (label == Label::kSpoof ? 1ull : 0ull) << 32 |
                              static_cast<std::uint64_t>(ordinal);
    Rng rng(mix_seed(config.seed, tag));
    const double dur = rng.uniform(config.min_duration_s, config.max_duration_s);
    AudioClip clip = generate_bonafide(rng.next_u64(), dur);
    if (label == Label::kSpoof) {
      const auto& pool = is_train ? result.train_channels : result.eval_channels;
      ReplayChannelConfig ch = pool[rng.below(pool.size())];
      clip = apply_replay_channel(clip, ch);
    }
    const std::filesystem::path rel = std::filesystem::path("wav") / (std::string(id) + ".wav");
    save_wav(clip, out_dir / rel);
    ManifestEntry e{id, rel, label};
    bucket.push_back(e);
    all.push_back(e);
  };

  for (int i = 0; i < train_b; ++i) emit(true, Label::kBonafide, i);
  for (int i = 0; i < train_s; ++i) emit(true, Label::kSpoof, i);
  for (int i = 0; i < config.n_bonafide - train_b; ++i) emit(false, Label::kBonafide, i);
  for (int i = 0; i < config.n_spoof - train_s; ++i) emit(false, Label::kSpoof, i);

  result.manifest = out_dir / "manifest.tsv";
  result.train_manifest = out_dir / "train.tsv";
  result.eval_manifest = out_dir / "eval.tsv";
  result.eval_keys = out_dir / "eval_keys.txt";
  write_manifest(all, result.manifest);
  write_manifest(train, result.train_manifest);
  write_manifest(eval, result.eval_manifest);
  if (config.augment_sources) {
    write_augment_sources(out_dir, mix_seed(config.seed, 0xA06));
    result.noise_dir = out_dir / "noise";
    result.rir_dir = out_dir / "rir";
  }
  keys.open(result.eval_keys, std::ios::trunc);
  if (!keys) fail(ErrorCode::kIoError, "cannot open " + result.eval_keys.string());
  for (const auto& e : eval) keys << e.utt_id << ' ' << label_name(e.label) << '\n';
  return result;
}

CorpusResult build_corpus(int n_bonafide, int n_spoof,
                          const std::filesystem::path& out_dir,
                          std::uint64_t seed) {
  CorpusConfig c;
  c.n_bonafide = n_bonafide;
  c.n_spoof = n_spoof;
  c.seed = seed;
  return build_corpus(c, out_dir);
}

}  // namespace replaydet
