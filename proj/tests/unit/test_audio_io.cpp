#include <doctest.h>

#include <cstring>
#include <fstream>

#include "replaydet/audio_io.hpp"
#include "replaydet/error.hpp"
#include "support.hpp"

using namespace replaydet;

namespace {

// Hand-assembled WAV bytes so the loader is checked against a writer it
// does not share code with.
std::vector<unsigned char> wav_bytes(int rate, int channels, int format,
                                     int bits, const std::vector<unsigned char>& data) {
  std::vector<unsigned char> b;
  auto put = [&](const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    b.insert(b.end(), c, c + n);
  };
  auto u32 = [&](std::uint32_t v) { put(&v, 4); };
  auto u16 = [&](std::uint16_t v) { put(&v, 2); };
  put("RIFF", 4);
  u32(36 + data.size());
  put("WAVE", 4);
  put("fmt ", 4);
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(channels * bits / 8);
  u16(bits);
  put("data", 4);
  u32(data.size());
  put(data.data(), data.size());
  return b;
}

std::vector<unsigned char> pcm16(const std::vector<double>& x) {
  std::vector<unsigned char> d;
  for (double v : x) {
    auto s = static_cast<std::int16_t>(std::lround(v * 32767.0));
    d.push_back(s & 0xff);
    d.push_back((s >> 8) & 0xff);
  }
  return d;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& b) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), b.size());
}

}  // namespace

TEST_CASE("16 kHz mono PCM16 passes through unchanged in length and rate") {
  const auto x = oracle::sine(440, 16000, 16000, 0.5);
  const auto clip = parse_wav(wav_bytes(16000, 1, 1, 16, pcm16(x)));
  CHECK(clip.size() == 16000);
  CHECK(clip.sample_rate_hz == 16000);
  for (std::size_t i = 0; i < x.size(); i += 97)
    CHECK(std::abs(clip.samples[i] - x[i]) <= 1e-4);
}

TEST_CASE("8 kHz input is upsampled to 16 kHz with the sine frequency kept") {
  const auto x = oracle::sine(440, 8000, 8000, 0.5);
  const auto clip = parse_wav(wav_bytes(8000, 1, 1, 16, pcm16(x)));
  CHECK(clip.size() == 16000);
  CHECK(clip.sample_rate_hz == 16000);
  CHECK(oracle::peak_frequency(clip.samples, 16000) == doctest::Approx(440).epsilon(1.0 / 440));
}

TEST_CASE("stereo with opposite constant channels downmixes to silence") {
  std::vector<double> inter;
  for (int i = 0; i < 1000; ++i) {
    inter.push_back(0.5);
    inter.push_back(-0.5);
  }
  const auto clip = parse_wav(wav_bytes(16000, 2, 1, 16, pcm16(inter)));
  REQUIRE(clip.size() == 1000);
  for (double v : clip.samples) CHECK(v == 0.0);
}

TEST_CASE("float32 input is taken as-is") {
  std::vector<float> f = {0.25f, -0.75f, 1.0f, 0.0f};
  std::vector<unsigned char> d(f.size() * 4);
  std::memcpy(d.data(), f.data(), d.size());
  const auto clip = parse_wav(wav_bytes(16000, 1, 3, 32, d));
  REQUIRE(clip.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(clip.samples[i] == doctest::Approx(f[i]));
}

TEST_CASE("clips longer than 30 s are truncated") {
  std::vector<double> x(16000 * 31, 0.1);
  const auto clip = parse_wav(wav_bytes(16000, 1, 1, 16, pcm16(x)));
  CHECK(clip.size() == 16000 * 30);
}

TEST_CASE("load errors carry the right code") {
  auto dir = oracle::scratch_dir("audio_errors");
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kConfig;
  };
  CHECK(code_of([&] { load_wav(dir / "missing.wav"); }) == ErrorCode::kFileNotFound);

  auto alaw = wav_bytes(16000, 1, 6, 8, std::vector<unsigned char>(100, 0));
  write_bytes(dir / "alaw.wav", alaw);
  CHECK(code_of([&] { load_wav(dir / "alaw.wav"); }) == ErrorCode::kUnsupportedFormat);

  std::vector<unsigned char> junk = {'J', 'U', 'N', 'K', 0, 0, 0, 0};
  write_bytes(dir / "junk.wav", junk);
  CHECK(code_of([&] { load_wav(dir / "junk.wav"); }) == ErrorCode::kCorruptHeader);
}

TEST_CASE("save rejects an empty clip") {
  auto dir = oracle::scratch_dir("audio_empty");
  AudioClip empty;
  try {
    save_wav(empty, dir / "e.wav");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPreconditionViolation);
  }
}

TEST_CASE("constant 0.25 round-trips within one LSB") {
  auto dir = oracle::scratch_dir("audio_const");
  AudioClip c{std::vector<double>(160, 0.25), 16000};
  save_wav(c, dir / "c.wav");
  const auto back = load_wav(dir / "c.wav");
  REQUIRE(back.size() == 160);
  for (double v : back.samples) CHECK(std::abs(v - 0.25) <= std::ldexp(1.0, -15));
}

TEST_CASE("random 1 s clip round-trips with SNR of at least 80 dB") {
  // Uniform quantization of a full-scale signal gives about 6.02*16 + 1.76 dB;
  // a signal at 0.5 RMS loses a few dB of that, which still clears 80.
  auto dir = oracle::scratch_dir("audio_snr");
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AudioClip c;
  c.samples.resize(16000);
  for (double& v : c.samples) v = u(gen);
  save_wav(c, dir / "r.wav");
  const auto back = load_wav(dir / "r.wav");
  double err = 0;
  for (std::size_t i = 0; i < c.size(); ++i) err += std::pow(back.samples[i] - c.samples[i], 2);
  const double snr = 10 * std::log10(oracle::energy(c.samples) / err);
  CHECK(snr >= 80.0);
}

TEST_CASE("property: save/load round-trip stays within 16-bit quantization") {
  auto dir = oracle::scratch_dir("audio_prop");
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> len(1, 3000);
    AudioClip c;
    c.samples.resize(len(gen));
    for (double& v : c.samples) v = u(gen);
    save_wav(c, dir / "p.wav");
    const auto back = load_wav(dir / "p.wav");
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      CHECK(std::abs(back.samples[i] - c.samples[i]) <= std::ldexp(1.0, -15));
  }
}

TEST_CASE("resample to the same rate is the identity") {
  AudioClip c{oracle::white_noise(1234, 3), 16000};
  const auto r = resample(c, 16000);
  CHECK(r.samples == c.samples);
}

TEST_CASE("1 kHz sine upsampled to 32 kHz keeps its peak at 1 kHz") {
  AudioClip c{oracle::sine(1000, 16000, 16000, 0.8), 16000};
  const auto r = resample(c, 32000);
  CHECK(r.size() == 32000);
  CHECK(r.sample_rate_hz == 32000);
  CHECK(std::abs(oracle::peak_frequency(r.samples, 32000) - 1000.0) <= 1.0);
}

TEST_CASE("7.9 kHz sine downsampled to 8 kHz is rejected by the anti-alias filter") {
  AudioClip c{oracle::sine(7900, 16000, 16000, 0.8), 16000};
  const auto r = resample(c, 8000);
  CHECK(r.size() == 8000);
  // Compare power (energy per sample) so the length change does not count.
  const double p_in = oracle::energy(c.samples) / c.size();
  const double p_out = oracle::energy(r.samples) / r.size();
  CHECK(p_out < 0.01 * p_in);
}

TEST_CASE("property: output length is round(n * target / source)") {
  for (int n : {1, 7, 100, 999, 16001})
    for (int target : {1000, 8000, 11025, 22050, 44100}) {
      AudioClip c{std::vector<double>(n, 0.1), 16000};
      CHECK(resample(c, target).size() ==
            static_cast<std::size_t>(std::llround(double(n) * target / 16000)));
    }
}

TEST_CASE("property: down-up resampling keeps the passband within 0.5 dB per band") {
  // Multitone below 0.9 * 8000 / 2 = 3600 Hz, through 16k -> 8k -> 16k.
  const std::vector<double> tones = {300, 700, 1300, 2100, 2900, 3500};
  std::vector<double> x(32000, 0.0);
  for (double f : tones) {
    const auto s = oracle::sine(f, x.size(), 16000, 0.1, f / 1000.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
  }
  AudioClip c{x, 16000};
  const auto back = resample(resample(c, 8000), 16000);
  REQUIRE(back.size() == c.size());
  // Trim the edges where the kernel runs off the signal.
  std::vector<double> a(c.samples.begin() + 2000, c.samples.end() - 2000);
  std::vector<double> b(back.samples.begin() + 2000, back.samples.end() - 2000);
  for (double f : tones) {
    const double ea = oracle::band_energy(a, 16000, f - 50, f + 50);
    const double eb = oracle::band_energy(b, 16000, f - 50, f + 50);
    CHECK(std::abs(10 * std::log10(eb / ea)) <= 0.5);
  }
}
