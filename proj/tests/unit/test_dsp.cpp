#include <doctest.h>

#include "replaydet/dsp.hpp"
#include "replaydet/error.hpp"
#include "support.hpp"

using namespace replaydet;

TEST_CASE("1 s clip at 50/25 ms gives 39 frames of 512 bins") {
  AudioClip c{oracle::white_noise(16000, 1), 16000};
  const auto s = stft_log_spectrogram(c, 50, 25, 1024);
  // Direct count of frame starts that fit.
  int frames = 0;
  for (int start = 0; start + 800 <= 16000; start += 400) ++frames;
  CHECK(frames == 39);
  CHECK(s.num_frames() == frames);
  CHECK(s.num_bins() == 512);
  CHECK(s.frame_len_samples == 800);
  CHECK(s.hop_samples == 400);
}

TEST_CASE("silence maps every value to log(eps)") {
  AudioClip c{std::vector<double>(4000, 0.0), 16000};
  const auto s = stft_log_spectrogram(c, 50, 25, 1024);
  CHECK((s.values.array() == std::log(1e-10)).all());
}

TEST_CASE("1 kHz sine peaks at bin 64 in every frame") {
  AudioClip c{oracle::sine(1000, 16000, 16000), 16000};
  const auto s = stft_log_spectrogram(c, 50, 25, 1024);
  for (Eigen::Index f = 0; f < s.num_frames(); ++f) {
    Eigen::Index arg;
    s.values.row(f).maxCoeff(&arg);
    CHECK(arg == 64);
  }
}

TEST_CASE("spectrogram values agree with an independent windowed DFT") {
  const auto x = oracle::white_noise(2000, 2);
  AudioClip c{x, 16000};
  const auto s = stft_log_spectrogram(c, 50, 25, 1024);
  for (int f : {0, 2}) {
    std::vector<double> frame(800);
    for (int i = 0; i < 800; ++i)
      frame[i] = x[f * 400 + i] * (0.5 - 0.5 * std::cos(2 * oracle::kPi * i / 800));
    const auto X = oracle::fft_real(frame, 1024);
    for (int k = 0; k < 512; k += 17)
      CHECK(s.values(f, k) == doctest::Approx(std::log(std::abs(X[k]) + 1e-10)));
  }
}

TEST_CASE("too-short clip throws ClipTooShort") {
  AudioClip c{std::vector<double>(799, 0.1), 16000};
  try {
    stft_log_spectrogram(c, 50, 25, 1024);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kClipTooShort);
  }
}

TEST_CASE("property: frame count formula holds across lengths") {
  for (std::size_t n = 800; n < 5000; n += 137) {
    AudioClip c{std::vector<double>(n, 0.01), 16000};
    const auto s = stft_log_spectrogram(c, 50, 25, 1024);
    CHECK(static_cast<std::size_t>(s.num_frames()) == 1 + (n - 800) / 400);
    CHECK(frame_count(n, 800, 400) == 1 + (n - 800) / 400);
  }
}

TEST_CASE("property: all spectrogram values are finite") {
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    auto x = oracle::white_noise(3000, seed, 0.3);
    for (std::size_t i = 0; i < x.size(); i += 3) x[i] = 0;
    const auto s = stft_log_spectrogram(AudioClip{x, 16000}, 50, 25, 1024);
    CHECK(s.values.allFinite());
  }
}

TEST_CASE("mel projection: shape, silence floor and invalid sizes") {
  AudioClip c{oracle::white_noise(16000, 3), 16000};
  const auto s = stft_log_spectrogram(c, 50, 25, 1024);
  const auto m = mel_project(s, 80);
  CHECK(m.num_bins() == 80);
  CHECK(m.num_frames() == s.num_frames());
  CHECK(m.scale == SpectrumScale::kLogMel);
  CHECK(m.num_mel == 80);

  const auto silent = stft_log_spectrogram(AudioClip{std::vector<double>(4000, 0.0), 16000}, 50, 25, 1024);
  const auto ms = mel_project(silent, 40);
  const double v0 = ms.values(0, 0);
  CHECK(std::isfinite(v0));
  CHECK((ms.values.array() == v0).all());

  for (int bad : {1, 513}) {
    try {
      mel_project(s, bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidNumMel);
    }
  }
}

TEST_CASE("mel bands on white noise match a brute-force filterbank within 1 dB") {
  // Oracle: build HTK triangles from scratch and apply them to the linear
  // magnitudes frame by frame.
  AudioClip c{oracle::white_noise(16000, 4), 16000};
  const auto s = stft_log_spectrogram(c, 50, 25, 1024);
  const int num_mel = 40;
  const auto m = mel_project(s, num_mel);
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto inv = [](double me) { return 700.0 * (std::pow(10.0, me / 2595.0) - 1.0); };
  std::vector<double> edges(num_mel + 2);
  for (int i = 0; i < num_mel + 2; ++i) edges[i] = inv(mel(8000.0) * i / (num_mel + 1));
  for (int b = 0; b < num_mel; ++b) {
    double mean_oracle = 0, mean_impl = 0;
    for (Eigen::Index f = 0; f < s.num_frames(); ++f) {
      double acc = 0;
      for (int k = 0; k < 512; ++k) {
        const double hz = k * 16000.0 / 1024;
        double w = 0;
        if (hz > edges[b] && hz <= edges[b + 1]) w = (hz - edges[b]) / (edges[b + 1] - edges[b]);
        else if (hz > edges[b + 1] && hz < edges[b + 2]) w = (edges[b + 2] - hz) / (edges[b + 2] - edges[b + 1]);
        acc += w * std::exp(s.values(f, k));
      }
      mean_oracle += acc;
      mean_impl += std::exp(m.values(f, b));
    }
    if (mean_oracle <= 0) continue;  // band narrower than one bin
    CHECK(std::abs(20 * std::log10(mean_impl / mean_oracle)) <= 1.0);
  }
}

TEST_CASE("HTK mel conversion round-trips") {
  for (double hz : {0.0, 100.0, 1000.0, 8000.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz));
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
}

TEST_CASE("pre-emphasis analytic examples") {
  AudioClip c{std::vector<double>(10, 0.5), 16000};
  CHECK(pre_emphasis(c, 0.0).samples == c.samples);
  const auto y = pre_emphasis(c, 0.97);
  CHECK(y.samples[0] == doctest::Approx(0.5));
  for (std::size_t i = 1; i < y.size(); ++i) CHECK(y.samples[i] == doctest::Approx(0.015));
}

TEST_CASE("pre-emphasis boosts the high band relative to the low band") {
  std::vector<double> x = oracle::sine(7800, 16000, 16000, 0.3);
  for (double& v : x) v += 0.5;
  const auto y = pre_emphasis(AudioClip{x, 16000}, 0.97).samples;
  const double low = oracle::band_energy(y, 16000, 0, 500) / oracle::band_energy(x, 16000, 0, 500);
  const double high = oracle::band_energy(y, 16000, 7000, 8001) / oracle::band_energy(x, 16000, 7000, 8001);
  CHECK(high > low);
}

TEST_CASE("de-emphasis inverts pre-emphasis and has a geometric impulse response") {
  AudioClip x{oracle::white_noise(5000, 6, 0.3), 16000};
  const auto back = de_emphasis(pre_emphasis(x, 0.97), 0.97);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back.samples[i] - x.samples[i]) <= 1e-9);
  CHECK(de_emphasis(x, 0.0).samples == x.samples);

  AudioClip imp{std::vector<double>(50, 0.0), 16000};
  imp.samples[0] = 1.0;
  const auto h = de_emphasis(imp, 0.97);
  for (std::size_t n = 0; n < 50; ++n) CHECK(h.samples[n] == doctest::Approx(std::pow(0.97, n)));
}

TEST_CASE("log spectral distance of a spectrogram with itself is zero") {
  AudioClip c{oracle::white_noise(4000, 8), 16000};
  const auto s = stft_log_spectrogram(c, 50, 25, 1024);
  CHECK(log_spectral_distance(s, s) == 0.0);
  const auto mean = temporal_mean(s);
  CHECK(mean.size() == 512);
  CHECK(mean(10) == doctest::Approx(s.values.col(10).mean()));
}
