#include "replaydet/codec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "replaydet/error.hpp"
#include "replaydet/external.hpp"
#include "replaydet/fft.hpp"

namespace replaydet {
namespace {

constexpr std::size_t kHop = 320;  // 20 ms at 16 kHz
constexpr std::size_t kNumBands = 32;
constexpr std::size_t kBandWidth = kHop / kNumBands;
constexpr int kScaleBits = 5;
constexpr int kMaxScaleIndex = (1 << kScaleBits) - 1;
// scale = 2^((index - offset) / 2): 3 dB steps, index 0 marks an empty band.
constexpr int kScaleOffset = 19;
constexpr int kBitStep = 2;
constexpr int kMaxBitsPerCoeff = 16;
// 2-bit bands hold three levels; five of them pack into one byte.
constexpr std::size_t kTernaryGroup = 5;
constexpr int kTernaryGroupBits = 8;
constexpr long kTernaryBandBits =
    static_cast<long>(kBandWidth / kTernaryGroup) * kTernaryGroupBits;
static_assert(kBandWidth % kTernaryGroup == 0);

class BitWriter {
 public:
  void put(std::uint32_t value, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      if (used_ % 8 == 0) bytes_.push_back(0);
      if ((value >> b) & 1u)
        bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (used_ % 8));
      ++used_;
    }
  }
  std::size_t bits_used() const { return used_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  std::uint32_t get(int bits) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b) {
      const std::size_t byte = pos_ / 8;
      if (byte >= bytes_.size())
        fail(ErrorCode::kCorruptPackage, "frame ends mid-field");
      v = (v << 1) | ((bytes_[byte] >> (7 - pos_ % 8)) & 1u);
      ++pos_;
    }
    return v;
  }
  std::size_t bits_read() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

const std::vector<double>& sine_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(2 * kHop);
    for (std::size_t n = 0; n < v.size(); ++n)
      v[n] = std::sin(std::numbers::pi * (static_cast<double>(n) + 0.5) /
                      static_cast<double>(2 * kHop));
    return v;
  }();
  return w;
}

double scale_value(int index) {
  return std::exp2(static_cast<double>(index - kScaleOffset) / 2.0);
}

int scale_index(double max_abs) {
  if (!(max_abs > scale_value(0))) return 0;
  const int idx =
      static_cast<int>(std::ceil(2.0 * std::log2(max_abs))) + kScaleOffset;
  return std::clamp(idx, 1, kMaxScaleIndex);
}

std::size_t active_bands(int bitrate_bps) {
  const double band_hz = kCanonicalRate / 2.0 / kNumBands;
  return static_cast<std::size_t>(std::floor(cutoff_hz(bitrate_bps) / band_hz + 1e-9));
}

// Bits per coefficient for each band. Deterministic in the scale indices and
// the budget, so the decoder recomputes it instead of reading it.
std::array<int, kNumBands> allocate_bits(const std::array<int, kNumBands>& scale,
                                         std::size_t bands, long budget_bits) {
  std::array<int, kNumBands> bits{};
  auto band_bits = [](int per_coeff) {
    if (per_coeff == 0) return 0L;
    if (per_coeff == kBitStep) return kTernaryBandBits;
    return static_cast<long>(per_coeff) * static_cast<long>(kBandWidth);
  };
  auto step_cost = [&](int current) {
    return band_bits(current + kBitStep) - band_bits(current);
  };
  for (;;) {
    int best_band = -1;
    int best_priority = 0;
    for (std::size_t b = 0; b < bands; ++b) {
      if (scale[b] == 0 || bits[b] + kBitStep > kMaxBitsPerCoeff) continue;
      if (step_cost(bits[b]) > budget_bits) continue;
      // Scale is in 3 dB units. Charging 9 dB per coded bit instead of the
      // MSE-optimal 6 dB spreads bits toward the weaker bands below cutoff.
      const int priority = scale[b] - 3 * bits[b];
      if (best_band < 0 || priority > best_priority) {
        best_band = static_cast<int>(b);
        best_priority = priority;
      }
    }
    if (best_band < 0) break;
    const auto chosen = static_cast<std::size_t>(best_band);
    budget_bits -= step_cost(bits[chosen]);
    bits[chosen] += kBitStep;
  }
  return bits;
}

// Scale factors: the first as a plain 5-bit index, the rest as signed
// Exp-Golomb deltas from their lower neighbour.
void put_scales(BitWriter& out, const std::array<int, kNumBands>& scale,
                std::size_t bands) {
  out.put(static_cast<std::uint32_t>(scale[0]), kScaleBits);
  for (std::size_t b = 1; b < bands; ++b) {
    const int d = scale[b] - scale[b - 1];
    const auto code = static_cast<std::uint32_t>(d > 0 ? 2 * d - 1 : -2 * d) + 1;
    const int width = std::bit_width(code);
    out.put(0, width - 1);
    out.put(code, width);
  }
}

std::array<int, kNumBands> get_scales(BitReader& in, std::size_t bands) {
  std::array<int, kNumBands> scale{};
  scale[0] = static_cast<int>(in.get(kScaleBits));
  for (std::size_t b = 1; b < bands; ++b) {
    int zeros = 0;
    while (in.get(1) == 0)
      if (++zeros > kScaleBits + 1)
        fail(ErrorCode::kCorruptPackage, "scale delta code too long");
    const std::uint32_t code = (1u << zeros) | in.get(zeros);
    const auto z = static_cast<int>(code - 1);
    const int d = (z % 2 == 1) ? (z + 1) / 2 : -z / 2;
    scale[b] = scale[b - 1] + d;
    if (scale[b] < 0 || scale[b] > kMaxScaleIndex)
      fail(ErrorCode::kCorruptPackage, "scale index out of range");
  }
  return scale;
}

std::size_t num_frames_for(std::size_t n) { return (n + kHop - 1) / kHop + 1; }

std::size_t frame_byte_budget(std::size_t n, int bitrate_bps) {
  const double total_bytes = static_cast<double>(bitrate_bps) / 8.0 *
                             static_cast<double>(n) / kCanonicalRate;
  return static_cast<std::size_t>(
      std::floor(total_bytes / static_cast<double>(num_frames_for(n))));
}

std::vector<std::uint8_t> encode_frame(std::span<const double> coeffs,
                                       std::size_t bands,
                                       std::size_t budget_bytes) {
  BitWriter out;
  std::array<int, kNumBands> scale{};
  bool any = false;
  for (std::size_t b = 0; b < bands; ++b) {
    double m = 0.0;
    for (std::size_t i = 0; i < kBandWidth; ++i)
      m = std::max(m, std::abs(coeffs[b * kBandWidth + i]));
    scale[b] = scale_index(m);
    any = any || scale[b] != 0;
  }
  BitWriter side;
  side.put(1, 1);
  if (any) put_scales(side, scale, bands);
  const auto side_bits = static_cast<long>(side.bits_used());
  if (!any || static_cast<long>(budget_bytes * 8) < side_bits) {
    out.put(0, 1);
    return out.take();
  }
  out.put(1, 1);
  put_scales(out, scale, bands);
  const auto bits =
      allocate_bits(scale, bands, static_cast<long>(budget_bytes * 8) - side_bits);
  for (std::size_t b = 0; b < bands; ++b) {
    if (bits[b] == 0) continue;
    const int levels = (1 << (bits[b] - 1)) - 1;
    const double s = scale_value(scale[b]);
    auto level = [&](std::size_t i) {
      const double q = std::round(coeffs[b * kBandWidth + i] / s * levels);
      return static_cast<int>(std::clamp(q, -double(levels), double(levels)));
    };
    if (bits[b] == kBitStep) {
      for (std::size_t g = 0; g < kBandWidth; g += kTernaryGroup) {
        std::uint32_t packed = 0;
        for (std::size_t i = kTernaryGroup; i-- > 0;)
          packed = packed * 3 + static_cast<std::uint32_t>(level(g + i) + 1);
        out.put(packed, kTernaryGroupBits);
      }
      continue;
    }
    for (std::size_t i = 0; i < kBandWidth; ++i)
      out.put(static_cast<std::uint32_t>(level(i) + levels), bits[b]);
  }
  return out.take();
}

std::vector<double> decode_frame(const std::vector<std::uint8_t>& bytes,
                                 std::size_t bands, std::size_t budget_bytes) {
  std::vector<double> coeffs(kHop, 0.0);
  if (bytes.empty()) fail(ErrorCode::kCorruptPackage, "empty frame");
  if (bytes.size() > budget_bytes && bytes.size() > 1)
    fail(ErrorCode::kCorruptPackage, "frame exceeds bit budget");
  BitReader in(bytes);
  if (in.get(1) == 0) return coeffs;
  const auto scale = get_scales(in, bands);
  const auto side_bits = static_cast<long>(in.bits_read());
  const auto bits =
      allocate_bits(scale, bands, static_cast<long>(budget_bytes * 8) - side_bits);
  for (std::size_t b = 0; b < bands; ++b) {
    if (bits[b] == 0) continue;
    const int levels = (1 << (bits[b] - 1)) - 1;
    const double s = scale_value(scale[b]);
    if (bits[b] == kBitStep) {
      for (std::size_t g = 0; g < kBandWidth; g += kTernaryGroup) {
        std::uint32_t packed = in.get(kTernaryGroupBits);
        if (packed >= 243) fail(ErrorCode::kCorruptPackage, "ternary group out of range");
        for (std::size_t i = 0; i < kTernaryGroup; ++i, packed /= 3)
          coeffs[b * kBandWidth + g + i] = s * (static_cast<int>(packed % 3) - 1);
      }
      continue;
    }
    for (std::size_t i = 0; i < kBandWidth; ++i) {
      const int q = static_cast<int>(in.get(bits[b])) - levels;
      if (q > levels) fail(ErrorCode::kCorruptPackage, "quantizer level out of range");
      coeffs[b * kBandWidth + i] = s * q / levels;
    }
  }
  return coeffs;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::kExternalCodecFailure, "missing output " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CompressedPackage encode_external(const AudioClip& clip, const CodecConfig& config) {
  require(!config.encode_command.empty(), "external encode command is empty");
  TempDir dir;
  const auto in_path = dir.path() / "in.wav";
  const auto out_path = dir.path() / "package.bin";
  save_wav(clip, in_path);
  const int status = run_shell(expand_command(
      config.encode_command, {{"input", in_path.string()},
                              {"output", out_path.string()},
                              {"bitrate", std::to_string(config.bitrate_bps)}}));
  if (status != 0)
    fail(ErrorCode::kExternalCodecFailure,
         "encoder exited with status " + std::to_string(status));
  CompressedPackage pkg;
  pkg.config = config;
  pkg.original_length = clip.size();
  pkg.frames.push_back(read_file(out_path));
  return pkg;
}

AudioClip decode_external(const CompressedPackage& pkg) {
  const auto& config = pkg.config;
  require(!config.decode_command.empty(), "external decode command is empty");
  TempDir dir;
  const auto in_path = dir.path() / "package.bin";
  const auto out_path = dir.path() / "out.wav";
  {
    std::ofstream out(in_path, std::ios::binary);
    for (const auto& f : pkg.frames)
      out.write(reinterpret_cast<const char*>(f.data()),
                static_cast<std::streamsize>(f.size()));
    if (!out) fail(ErrorCode::kIoError, "cannot write " + in_path.string());
  }
  const int status = run_shell(expand_command(
      config.decode_command, {{"input", in_path.string()},
                              {"output", out_path.string()},
                              {"bitrate", std::to_string(config.bitrate_bps)}}));
  if (status != 0)
    fail(ErrorCode::kExternalCodecFailure,
         "decoder exited with status " + std::to_string(status));
  AudioClip out;
  try {
    out = load_wav(out_path);
  } catch (const Error& e) {
    fail(ErrorCode::kExternalCodecFailure, e.what());
  }
  // Codec delay and padding are trimmed or zero-filled to the source length.
  out.samples.resize(pkg.original_length, 0.0);
  return out;
}

}  // namespace

void CodecConfig::validate() const {
  require(std::find(std::begin(kSupportedBitrates), std::end(kSupportedBitrates),
                    bitrate_bps) != std::end(kSupportedBitrates),
          "bitrate " + std::to_string(bitrate_bps) +
              " not in {8000, 10000, 12000, 14000, 16000}");
  require(sample_rate_hz == kCanonicalRate, "codec runs at 16 kHz only");
  require(channels == 1, "codec is mono only");
}

double cutoff_hz(int bitrate_bps) {
  switch (bitrate_bps) {
    case 16000: return 7000.0;
    case 14000: return 6500.0;
    case 12000: return 6000.0;
    case 10000: return 5000.0;
    case 8000: return 4000.0;
    default:
      fail(ErrorCode::kPreconditionViolation,
           "no cutoff for bitrate " + std::to_string(bitrate_bps));
  }
}

std::size_t CompressedPackage::byte_size() const {
  std::size_t total = 0;
  for (const auto& f : frames) total += f.size();
  return total;
}

std::vector<double> mdct_forward(std::span<const double> block) {
  require(block.size() == 2 * kHop, "MDCT block must be 640 samples");
  const auto& w = sine_window();
  const std::size_t n = kHop;
  const std::size_t h = n / 2;
  std::vector<double> folded(n);
  auto z = [&](std::size_t i) { return block[i] * w[i]; };
  for (std::size_t i = 0; i < h; ++i)
    folded[i] = -z(3 * h - 1 - i) - z(3 * h + i);
  for (std::size_t i = h; i < n; ++i) folded[i] = z(i - h) - z(3 * h - 1 - i);
  std::vector<double> coeffs(n);
  dct4(n).transform(folded, coeffs);
  return coeffs;
}

std::vector<double> mdct_inverse(std::span<const double> coeffs) {
  require(coeffs.size() == kHop, "MDCT frame must have 320 coefficients");
  const auto& w = sine_window();
  const std::size_t n = kHop;
  const std::size_t h = n / 2;
  std::vector<double> u(n);
  dct4(n).transform(coeffs, u);
  // Unfold (u1, u2) into (u2, -u2 reversed, -u1 reversed, -u1).
  std::vector<double> y(2 * n);
  for (std::size_t i = 0; i < h; ++i) {
    y[i] = u[h + i];
    y[h + i] = -u[n - 1 - i];
    y[n + i] = -u[h - 1 - i];
    y[n + h + i] = -u[i];
  }
  for (std::size_t i = 0; i < 2 * n; ++i) y[i] *= w[i];
  return y;
}

CompressedPackage encode(const AudioClip& clip, const CodecConfig& config) {
  config.validate();
  require(clip.sample_rate_hz == kCanonicalRate, "codec input must be 16 kHz");
  require(!clip.empty(), "codec input is empty");
  if (config.mode == CodecMode::kExternalCommand)
    return encode_external(clip, config);

  const std::size_t n = clip.size();
  const std::size_t frames = num_frames_for(n);
  const std::size_t budget = frame_byte_budget(n, config.bitrate_bps);
  const std::size_t bands = active_bands(config.bitrate_bps);

  CompressedPackage pkg;
  pkg.config = config;
  pkg.original_length = n;
  pkg.frames.reserve(frames);
  std::vector<double> block(2 * kHop);
  for (std::size_t t = 0; t < frames; ++t) {
    // Frame t covers samples [(t - 1) * hop, (t + 1) * hop).
    const auto begin = static_cast<std::int64_t>(t * kHop) -
                       static_cast<std::int64_t>(kHop);
    for (std::size_t i = 0; i < block.size(); ++i) {
      const std::int64_t s = begin + static_cast<std::int64_t>(i);
      block[i] = (s >= 0 && s < static_cast<std::int64_t>(n))
                     ? clip.samples[static_cast<std::size_t>(s)]
                     : 0.0;
    }
    pkg.frames.push_back(encode_frame(mdct_forward(block), bands, budget));
  }
  return pkg;
}

AudioClip decode(const CompressedPackage& package) {
  package.config.validate();
  if (package.config.mode == CodecMode::kExternalCommand)
    return decode_external(package);

  const std::size_t n = package.original_length;
  if (package.frames.size() != num_frames_for(n))
    fail(ErrorCode::kCorruptPackage,
         "expected " + std::to_string(num_frames_for(n)) + " frames, got " +
             std::to_string(package.frames.size()));
  const std::size_t budget = frame_byte_budget(n, package.config.bitrate_bps);
  const std::size_t bands = active_bands(package.config.bitrate_bps);

  std::vector<double> acc((package.frames.size() + 1) * kHop, 0.0);
  for (std::size_t t = 0; t < package.frames.size(); ++t) {
    const auto coeffs = decode_frame(package.frames[t], bands, budget);
    const auto y = mdct_inverse(coeffs);
    // acc index = sample index + hop.
    for (std::size_t i = 0; i < y.size(); ++i) acc[t * kHop + i] += y[i];
  }
  AudioClip out;
  out.sample_rate_hz = kCanonicalRate;
  out.samples.assign(acc.begin() + static_cast<long>(kHop),
                     acc.begin() + static_cast<long>(kHop + n));
  return out;
}

AudioClip roundtrip(const AudioClip& clip, const CodecConfig& config) {
  return decode(encode(clip, config));
}

ConfiguredCodec::ConfiguredCodec(CodecConfig config) : config_(std::move(config)) {
  config_.validate();
}

AudioClip ConfiguredCodec::roundtrip(const AudioClip& clip) const {
  return replaydet::roundtrip(clip, config_);
}

}  // namespace replaydet
