#include "replaydet/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "replaydet/error.hpp"

namespace replaydet {
namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  require(n >= 2, "FFT size must be at least 2");
  std::lock_guard lock(planner_mutex());
  real_buf_ = fftw_alloc_real(n);
  auto* cbuf = fftw_alloc_complex(n / 2 + 1);
  complex_buf_ = cbuf;
  const int size = static_cast<int>(n);
  forward_plan_ =
      fftw_plan_dft_r2c_1d(size, real_buf_, cbuf, FFTW_ESTIMATE);
  inverse_plan_ =
      fftw_plan_dft_c2r_1d(size, cbuf, real_buf_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_buf_);
  fftw_free(complex_buf_);
}

void RealFft::forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
  require(in.size() <= n_, "FFT input longer than transform size");
  require(out.size() == num_bins(), "FFT output size mismatch");
  std::copy(in.begin(), in.end(), real_buf_);
  std::fill(real_buf_ + in.size(), real_buf_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  const auto* c = static_cast<const fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {c[k][0], c[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
  require(in.size() == num_bins(), "IFFT input size mismatch");
  require(out.size() == n_, "IFFT output size mismatch");
  auto* c = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < in.size(); ++k) {
    c[k][0] = in[k].real();
    c[k][1] = in[k].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = real_buf_[i] * scale;
}

RealFft& real_fft(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

Dct4::Dct4(std::size_t n) : n_(n) {
  require(n >= 2, "DCT size must be at least 2");
  std::lock_guard lock(planner_mutex());
  in_buf_ = fftw_alloc_real(n);
  out_buf_ = fftw_alloc_real(n);
  plan_ = fftw_plan_r2r_1d(static_cast<int>(n), in_buf_, out_buf_,
                           FFTW_REDFT11, FFTW_ESTIMATE);
}

Dct4::~Dct4() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(in_buf_);
  fftw_free(out_buf_);
}

void Dct4::transform(std::span<const double> in, std::span<double> out) {
  require(in.size() == n_ && out.size() == n_, "DCT size mismatch");
  std::copy(in.begin(), in.end(), in_buf_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  // REDFT11 carries a factor of 2 relative to the plain DCT-IV sum.
  const double scale = 0.5 * std::sqrt(2.0 / static_cast<double>(n_));
  for (std::size_t i = 0; i < n_; ++i) out[i] = out_buf_[i] * scale;
}

Dct4& dct4(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<Dct4>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Dct4>(n);
  return *slot;
}

std::vector<double> magnitude_spectrum(std::span<const double> x,
                                       std::size_t n) {
  auto& fft = real_fft(n);
  std::vector<std::complex<double>> bins(fft.num_bins());
  fft.forward(x, bins);
  std::vector<double> mag(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) mag[k] = std::abs(bins[k]);
  return mag;
}

}  // namespace replaydet
