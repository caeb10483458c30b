#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace replaydet {

// Real-input DFT of a fixed size backed by FFTW. Instances are not
// thread-safe; use real_fft() for a per-thread cached instance.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t num_bins() const { return n_ / 2 + 1; }

  // in.size() <= n (zero-padded); out.size() == n/2 + 1.
  void forward(std::span<const double> in,
               std::span<std::complex<double>> out);

  // Inverse transform scaled by 1/n, so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_buf_;
  void* complex_buf_;
  void* forward_plan_;
  void* inverse_plan_;
};

RealFft& real_fft(std::size_t n);

// Orthonormal DCT-IV: X[k] = sqrt(2/n) sum_j x[j] cos(pi/n (j+1/2)(k+1/2)).
// Self-inverse.
class Dct4 {
 public:
  explicit Dct4(std::size_t n);
  ~Dct4();
  Dct4(const Dct4&) = delete;
  Dct4& operator=(const Dct4&) = delete;

  std::size_t size() const { return n_; }
  void transform(std::span<const double> in, std::span<double> out);

 private:
  std::size_t n_;
  double* in_buf_;
  double* out_buf_;
  void* plan_;
};

Dct4& dct4(std::size_t n);

// Magnitude spectrum |X[k]|, k = 0..n/2, of a zero-padded real signal.
std::vector<double> magnitude_spectrum(std::span<const double> x,
                                       std::size_t n);

}  // namespace replaydet
