#pragma once

// Reference implementations used as test oracles. None of them share code
// with the library under test.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// Recursive radix-2 FFT; input is zero-padded to a power of two.
inline std::vector<std::complex<double>> fft(std::vector<std::complex<double>> a) {
  std::size_t n = 1;
  while (n < a.size()) n <<= 1;
  a.resize(n);
  if (n == 1) return a;
  std::vector<std::complex<double>> even(n / 2), odd(n / 2);
  for (std::size_t i = 0; i < n / 2; ++i) {
    even[i] = a[2 * i];
    odd[i] = a[2 * i + 1];
  }
  even = fft(even);
  odd = fft(odd);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const auto t = std::polar(1.0, -2.0 * kPi * k / n) * odd[k];
    a[k] = even[k] + t;
    a[k + n / 2] = even[k] - t;
  }
  return a;
}

inline std::vector<std::complex<double>> fft_real(const std::vector<double>& x,
                                                  std::size_t n = 0) {
  std::vector<std::complex<double>> a(x.begin(), x.end());
  if (n > a.size()) a.resize(n);
  return fft(a);
}

inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x,
                                                   std::size_t n) {
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k)
    for (std::size_t j = 0; j < std::min(n, x.size()); ++j)
      out[k] += x[j] * std::polar(1.0, -2.0 * kPi * double(k) * double(j) / double(n));
  return out;
}

inline std::vector<double> naive_dct4(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += x[j] * std::cos(kPi / n * (j + 0.5) * (k + 0.5));
    out[k] = std::sqrt(2.0 / n) * acc;
  }
  return out;
}

// Frequency of the largest-magnitude bin with parabolic interpolation.
inline double peak_frequency(const std::vector<double>& x, double fs) {
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    w[i] = x[i] * (0.5 - 0.5 * std::cos(2.0 * kPi * i / x.size()));
  const auto X = fft_real(w, 4 * x.size());
  const std::size_t n = X.size();
  std::size_t best = 1;
  for (std::size_t k = 1; k < n / 2; ++k)
    if (std::abs(X[k]) > std::abs(X[best])) best = k;
  const double a = std::log(std::abs(X[best - 1]) + 1e-300);
  const double b = std::log(std::abs(X[best]) + 1e-300);
  const double c = std::log(std::abs(X[best + 1]) + 1e-300);
  const double p = 0.5 * (a - c) / (a - 2 * b + c);
  return (best + p) * fs / n;
}

// Energy in [lo, hi) Hz, measured over the whole signal.
inline double band_energy(const std::vector<double>& x, double fs, double lo,
                          double hi) {
  const auto X = fft_real(x);
  const std::size_t n = X.size();
  double e = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = k * fs / n;
    if (f >= lo && f < hi) e += std::norm(X[k]);
  }
  return e;
}

inline double energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

inline std::vector<double> sine(double hz, std::size_t n, double fs,
                                double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * kPi * hz * i / fs + phase);
  return x;
}

inline std::vector<double> sawtooth(double hz, std::size_t n, double fs,
                                    double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = std::fmod(hz * i / fs, 1.0);
    x[i] = amp * (2.0 * ph - 1.0);
  }
  return x;
}

inline std::vector<double> white_noise(std::size_t n, std::uint32_t seed,
                                       double sd = 0.1) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> x(n);
  for (double& v : x) v = d(gen);
  return x;
}

// Brute-force EER: every unique score plus +inf is a threshold; FRR and FAR
// are recounted from scratch at each one.
struct Eer {
  double eer;
  double threshold;
};

inline Eer brute_force_eer(const std::vector<double>& bona,
                           const std::vector<double>& spoof) {
  std::vector<double> t(bona);
  t.insert(t.end(), spoof.begin(), spoof.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  t.push_back(INFINITY);
  std::vector<double> frr, far;
  for (double th : t) {
    double fr = 0, fa = 0;
    for (double b : bona) fr += b < th;
    for (double s : spoof) fa += s >= th;
    frr.push_back(fr / bona.size());
    far.push_back(fa / spoof.size());
  }
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double d = frr[k] - far[k];
    if (d == 0) return {frr[k], t[k]};
    if (d > 0) {
      const double dp = frr[k - 1] - far[k - 1];
      const double w = -dp / (d - dp);
      const double th = std::isfinite(t[k]) ? t[k - 1] + w * (t[k] - t[k - 1]) : t[k - 1];
      return {frr[k - 1] + w * (frr[k] - frr[k - 1]), th};
    }
  }
  return {NAN, NAN};
}

// Eigenvalues of a symmetric matrix (row-major n x n) by cyclic Jacobi
// rotations, sorted descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-22) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// max |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("replaydet_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
