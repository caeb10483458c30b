#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "replaydet/dsp.hpp"
#include "replaydet/error.hpp"
#include "replaydet/synth_corpus.hpp"
#include "replaydet/vocoder.hpp"
#include "support.hpp"

using namespace replaydet;

namespace {

double median_voiced(const std::vector<double>& f0) {
  std::vector<double> v;
  for (double x : f0)
    if (x > 0) v.push_back(x);
  if (v.empty()) return 0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

double voiced_fraction(const std::vector<double>& f0) {
  return double(std::count_if(f0.begin(), f0.end(), [](double x) { return x > 0; })) / f0.size();
}

}  // namespace

TEST_CASE("220 Hz sawtooth: median f0 within 5 Hz and mostly voiced") {
  AudioClip c{oracle::sawtooth(220, 16000, 16000), 16000};
  const auto a = SourceFilterVocoder().analyze(c);
  CHECK(median_voiced(a.f0_hz) >= 215);
  CHECK(median_voiced(a.f0_hz) <= 225);
  CHECK(voiced_fraction(a.f0_hz) >= 0.9);
}

TEST_CASE("white noise is mostly unvoiced") {
  AudioClip c{oracle::white_noise(16000, 21, 0.3), 16000};
  const auto a = SourceFilterVocoder().analyze(c);
  CHECK(voiced_fraction(a.f0_hz) <= 0.2);
}

TEST_CASE("silence is unvoiced with a floor envelope and resynthesizes to silence") {
  AudioClip c{std::vector<double>(4000, 0.0), 16000};
  SourceFilterVocoder v;
  const auto a = v.analyze(c);
  CHECK(voiced_fraction(a.f0_hz) == 0.0);
  CHECK(a.spectral_envelope.allFinite());
  CHECK(a.spectral_envelope.maxCoeff() <= a.spectral_envelope.minCoeff() * (1 + 1e-9));
  const auto out = v.resynthesize(c);
  CHECK(oracle::energy(out.samples) == 0.0);
}

TEST_CASE("property: f0 values are zero or inside the search range and envelopes are positive") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto c = generate_bonafide(seed, 1.0);
    const auto a = SourceFilterVocoder().analyze(c);
    for (double f : a.f0_hz) CHECK((f == 0.0 || (f >= 50.0 && f <= 500.0)));
    CHECK(a.spectral_envelope.allFinite());
    CHECK(a.spectral_envelope.minCoeff() > 0.0);
  }
}

TEST_CASE("too-short clip throws ClipTooShort") {
  AudioClip c{std::vector<double>(1599, 0.1), 16000};
  try {
    SourceFilterVocoder().analyze(c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kClipTooShort);
  }
}

TEST_CASE("resynthesized sawtooth keeps f0 within 5 Hz") {
  AudioClip c{oracle::sawtooth(220, 16000, 16000), 16000};
  SourceFilterVocoder v;
  const auto in = v.analyze(c);
  const auto out = v.analyze(v.synthesize(in, c.size()));
  CHECK(std::abs(median_voiced(out.f0_hz) - median_voiced(in.f0_hz)) <= 5.0);
}

TEST_CASE("unvoiced synthesis through a flat envelope is flat within 3 dB per octave") {
  SourceFilterVocoder v;
  VocoderAnalysis a;
  a.fft_size = 1024;
  a.frame_len_samples = 400;
  a.hop_samples = 160;
  a.peak = 0.5;
  const std::size_t frames = 200;
  a.f0_hz.assign(frames, 0.0);
  a.spectral_envelope = Eigen::MatrixXd::Ones(frames, 513);
  const auto out = v.synthesize(a, 32000);
  // Power per Hz in octave bands 125-250 ... 4000-8000 Hz.
  std::vector<double> density;
  for (double lo = 125; lo < 8000; lo *= 2)
    density.push_back(oracle::band_energy(out.samples, 16000, lo, std::min(2 * lo, 7999.0)) / lo);
  const double mean = std::accumulate(density.begin(), density.end(), 0.0) / density.size();
  for (double d : density) CHECK(std::abs(10 * std::log10(d / mean)) <= 3.0);
}

TEST_CASE("zero envelope synthesizes near-silence") {
  SourceFilterVocoder v;
  VocoderAnalysis a;
  a.fft_size = 1024;
  a.frame_len_samples = 400;
  a.hop_samples = 160;
  a.peak = 0.5;
  a.f0_hz.assign(50, 0.0);
  a.spectral_envelope = Eigen::MatrixXd::Zero(50, 513);
  const auto out = v.synthesize(a, 8000);
  CHECK(std::sqrt(oracle::energy(out.samples) / out.size()) < 1e-6);
}

TEST_CASE("resynthesis preserves length and is closer to the source than noise is") {
  SourceFilterVocoder v;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto c = generate_bonafide(100 + seed, 1.3);
    const auto r = v.resynthesize(c);
    CHECK(r.size() == c.size());
    CHECK(r.sample_rate_hz == c.sample_rate_hz);
    AudioClip noise{oracle::white_noise(c.size(), seed, 0.1), 16000};
    const auto sc = stft_log_spectrogram(c, 50, 25, 1024);
    const double d_resynth = log_spectral_distance(sc, stft_log_spectrogram(r, 50, 25, 1024));
    const double d_noise = log_spectral_distance(sc, stft_log_spectrogram(noise, 50, 25, 1024));
    CHECK(d_resynth < d_noise);
    CHECK(d_resynth > 0.0);
  }
}

TEST_CASE("property: length is preserved for arbitrary lengths") {
  SourceFilterVocoder v;
  for (std::size_t n : {1600u, 1601u, 2777u, 16000u, 20011u}) {
    AudioClip c{oracle::white_noise(n, n, 0.2), 16000};
    CHECK(v.resynthesize(c).size() == n);
  }
}

TEST_CASE("resynthesis is deterministic for a fixed seed") {
  const auto c = generate_bonafide(5, 1.0);
  VocoderConfig cfg;
  cfg.seed = 42;
  CHECK(SourceFilterVocoder(cfg).resynthesize(c).samples ==
        SourceFilterVocoder(cfg).resynthesize(c).samples);
}

TEST_CASE("external vocoder runs the command and checks its exit status") {
  const auto c = generate_bonafide(6, 1.0);
  const auto out = ExternalVocoder("cp {input} {output}").resynthesize(c);
  REQUIRE(out.size() == c.size());
  for (std::size_t i = 0; i < c.size(); i += 11) CHECK(std::abs(out.samples[i] - c.samples[i]) <= 1.0 / 32767);
  try {
    ExternalVocoder("false").resynthesize(c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kExternalVocoderFailure);
  }
}
