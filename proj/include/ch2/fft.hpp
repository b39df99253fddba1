#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "ch2/errors.hpp"

namespace ch2 {

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

// Real-to-complex / complex-to-real plan pair for one transform length.
// Plans are built once with FFTW_ESTIMATE (deterministic algorithm choice, so
// repeated runs reproduce bit-for-bit) and executed through the new-array
// interface, which FFTW guarantees to be thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    auto* real = fftw_alloc_real(n);
    auto* cplx = fftw_alloc_complex(n / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, real, cplx, flags);
    backward_ = fftw_plan_dft_c2r_1d(len, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    if (forward_ == nullptr || backward_ == nullptr) {
      throw Error("FFTW planning failed");
    }
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const noexcept { return n_; }

  // Unnormalized forward transform: out[m] = sum_j in[j] e^{-2 pi i j m / n}.
  void forward(std::span<const double> in,
               std::span<std::complex<double>> out) const {
    // r2c does not write its input.
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  // Unnormalized backward transform. Takes its input by value: c2r
  // overwrites the array it reads.
  void backward(Spectrum in, std::span<double> out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in.data()),
                         out.data());
  }

 private:
  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline const RealFft& fft_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace detail

/// Normalized Fourier coefficients c_m, m = 0..n/2, with
/// f(x_j) = sum over the full spectrum of c_m e^{i k_m (x_j + L)}.
inline Spectrum to_spectrum(std::span<const double> values) {
  const auto n = values.size();
  Spectrum out(n / 2 + 1);
  detail::fft_for(n).forward(values, out);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& c : out) c *= scale;
  return out;
}

/// Inverse of to_spectrum for a length-n grid.
inline std::vector<double> from_spectrum(Spectrum coeffs, std::size_t n) {
  std::vector<double> out(n);
  detail::fft_for(n).backward(std::move(coeffs), out);
  return out;
}

}  // namespace ch2
