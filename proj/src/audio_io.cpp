#include "replaydet/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

#include "replaydet/error.hpp"

namespace replaydet {
namespace {

constexpr double kKaiserBeta = 8.6;
constexpr int kTapsPerPhase = 64;
// Kernel cutoff relative to the lower Nyquist frequency.
constexpr double kCutoffFraction = 0.97;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

// Zeroth-order modified Bessel function of the first kind (power series).
double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

struct Kernel {
  double cutoff;      // in cycles per input sample, times 2 (1.0 = Nyquist)
  double half_width;  // in input samples
  double i0_beta;

  double operator()(double x) const {
    const double r = x / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double arg = std::numbers::pi * cutoff * x;
    const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
    const double window =
        bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    return cutoff * sinc * window;
  }
};

}  // namespace

AudioClip parse_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(ErrorCode::kCorruptHeader, "missing RIFF/WAVE signature");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size())
        fail(ErrorCode::kCorruptHeader, "truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == 0xFFFE) {
        if (size < 26) fail(ErrorCode::kCorruptHeader, "short extensible fmt");
        format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) fail(ErrorCode::kCorruptHeader, "no fmt chunk");
  if (data == nullptr) fail(ErrorCode::kCorruptHeader, "no data chunk");
  if (channels < 1 || channels > 2)
    fail(ErrorCode::kUnsupportedFormat,
         "channel count " + std::to_string(channels));
  if (rate == 0) fail(ErrorCode::kCorruptHeader, "zero sample rate");
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    fail(ErrorCode::kUnsupportedFormat,
         "format tag " + std::to_string(format) + " with " +
             std::to_string(bits) + " bits");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_size / frame_bytes;

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        const std::uint32_t u = read_u32(p);
        float f;
        std::memcpy(&f, &u, sizeof f);
        acc += std::isfinite(f) ? static_cast<double>(f) : 0.0;
      }
    }
    clip.samples[i] = std::clamp(acc / channels, -1.0, 1.0);
  }

  if (clip.sample_rate_hz != kCanonicalRate)
    clip = resample(clip, kCanonicalRate);
  const auto max_len =
      static_cast<std::size_t>(kMaxClipSeconds * kCanonicalRate);
  if (clip.samples.size() > max_len) clip.samples.resize(max_len);
  for (double& s : clip.samples) s = std::clamp(s, -1.0, 1.0);
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::kFileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " +
                              std::string(e.what()).substr(
                                  error_code_name(e.code()).size() + 2));
  }
}

std::vector<unsigned char> encode_wav_pcm16(const AudioClip& clip) {
  require(!clip.empty(), "cannot write an empty clip");
  require(clip.sample_rate_hz > 0, "sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (double s : clip.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path) {
  const auto bytes = encode_wav_pcm16(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<double> resample_ratio(std::span<const double> input, double ratio,
                                   std::size_t out_len) {
  require(ratio > 0.0, "resampling ratio must be positive");
  std::vector<double> out(out_len, 0.0);
  if (input.empty()) return out;

  const double scale = std::min(1.0, ratio);
  const Kernel kernel{kCutoffFraction * scale, (kTapsPerPhase / 2) / scale,
                      bessel_i0(kKaiserBeta)};
  const auto n = static_cast<std::int64_t>(input.size());
  const auto reach = static_cast<std::int64_t>(std::ceil(kernel.half_width));

  // Rational ratios revisit a small set of fractional phases; cache them.
  std::unordered_map<std::int64_t, std::vector<double>> phase_cache;
  const double step = 1.0 / ratio;
  const double phase_quantum = 1.0 / 4096.0;

  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) * step;
    const auto center = static_cast<std::int64_t>(std::floor(t));
    const double frac = t - static_cast<double>(center);
    const double frac_q = std::round(frac / phase_quantum);
    const bool exact = std::abs(frac - frac_q * phase_quantum) < 1e-12;

    std::vector<double> local;
    const std::vector<double>* taps = &local;
    if (exact) {
      auto key = static_cast<std::int64_t>(frac_q);
      auto it = phase_cache.find(key);
      if (it == phase_cache.end()) {
        std::vector<double> w(static_cast<std::size_t>(2 * reach + 1));
        for (std::int64_t k = -reach; k <= reach; ++k)
          w[static_cast<std::size_t>(k + reach)] =
              kernel(static_cast<double>(k) - frac);
        it = phase_cache.emplace(key, std::move(w)).first;
      }
      taps = &it->second;
    } else {
      local.resize(static_cast<std::size_t>(2 * reach + 1));
      for (std::int64_t k = -reach; k <= reach; ++k)
        local[static_cast<std::size_t>(k + reach)] =
            kernel(static_cast<double>(k) - frac);
    }

    double acc = 0.0;
    for (std::int64_t k = -reach; k <= reach; ++k) {
      const std::int64_t idx = center + k;
      if (idx < 0 || idx >= n) continue;
      acc += (*taps)[static_cast<std::size_t>(k + reach)] *
             input[static_cast<std::size_t>(idx)];
    }
    out[m] = acc;
  }
  return out;
}

AudioClip resample(const AudioClip& clip, int target_rate_hz) {
  require(target_rate_hz >= 1000, "target rate must be at least 1000 Hz");
  require(clip.sample_rate_hz > 0, "source rate must be positive");
  if (target_rate_hz == clip.sample_rate_hz) return clip;
  const double ratio =
      static_cast<double>(target_rate_hz) / clip.sample_rate_hz;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) * ratio));
  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.samples = resample_ratio(clip.samples, ratio, out_len);
  return out;
}

}  // namespace replaydet
