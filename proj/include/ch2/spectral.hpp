#pragma once

#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include "ch2/fft.hpp"
#include "ch2/grid.hpp"

namespace ch2 {

using cplx = std::complex<double>;

/// Multiply every Fourier mode of f by symbol(k, nyquist) and transform back.
/// The flag marks the unpaired Nyquist mode, where odd symbols must vanish
/// for the result to stay real.
template <class Symbol>
Field apply_symbol(const Field& f, Symbol&& symbol) {
  if (!f.valid()) return Field::poisoned(f.grid_ptr());
  const Grid& g = f.grid();
  Spectrum c = to_spectrum(f.values());
  const std::size_t nyq = g.N() / 2;
  for (std::size_t m = 0; m < c.size(); ++m) {
    c[m] *= symbol(g.wavenumber(m), m == nyq);
  }
  return Field(f.grid_ptr(), from_spectrum(std::move(c), g.N()));
}

/// Spectral d/dx.
inline Field derivative(const Field& f) {
  return apply_symbol(f, [](double k, bool nyq) {
    return nyq ? cplx{} : cplx{0.0, k};
  });
}

inline Field second_derivative(const Field& f) {
  return apply_symbol(f, [](double k, bool) { return cplx{-k * k, 0.0}; });
}

/// (1 - d^2/dx^2)^{-1}, i.e. periodized convolution with G(x) = e^{-|x|}/2.
inline Field helmholtz_inverse(const Field& f) {
  return apply_symbol(f,
                      [](double k, bool) { return cplx{1.0 / (1.0 + k * k)}; });
}

/// P(D) = -d/dx (1 - d^2/dx^2)^{-1}, symbol -ik/(1+k^2).
inline Field apply_PD(const Field& f) {
  return apply_symbol(f, [](double k, bool nyq) {
    return nyq ? cplx{} : cplx{0.0, -k / (1.0 + k * k)};
  });
}

/// (d^2/dx^2 G) * f computed as G*f - f.
inline Field second_kernel_apply(const Field& f) {
  return apply_symbol(f,
                      [](double k, bool) { return cplx{-k * k / (1.0 + k * k)}; });
}

/// Largest relative mode magnitude among the top tenth of wavenumbers.
inline double spectral_tail(const Field& f) {
  if (!f.valid()) return std::numeric_limits<double>::infinity();
  const Spectrum c = to_spectrum(f.values());
  double peak = 0.0;
  for (const auto& v : c) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  const std::size_t start = (c.size() * 9) / 10;
  double tail = 0.0;
  for (std::size_t m = start; m < c.size(); ++m) {
    tail = std::max(tail, std::abs(c[m]));
  }
  return tail / peak;
}

inline bool is_infinite_order(double p) noexcept { return std::isinf(p); }

/// Weighted L_p norm over the grid samples inside a window, rectangle rule.
/// p = infinity gives the windowed maximum of |w f|.
template <class WeightFn>
double weighted_lp_norm(const Field& f, WeightFn&& w, double p,
                        const Window& window) {
  const Grid& g = f.grid();
  if (!(p >= 1.0)) throw DomainError("norm order must be >= 1");
  if (window.lo < -g.L() || window.hi > g.L() || window.lo > window.hi) {
    throw DomainError("window must lie inside [-L, L]");
  }
  const auto& x = g.x();
  const auto vals = f.values();
  bool any = false;
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!window.contains(x[j])) continue;
    any = true;
    const double a = std::abs(w(x[j]) * vals[j]);
    if (is_infinite_order(p)) {
      if (!(a <= acc)) acc = a;  // propagates NaN
    } else {
      acc += std::pow(a, p);
    }
  }
  if (!any) throw DomainError("empty norm window");
  if (is_infinite_order(p)) return acc;
  return std::pow(acc * g.dx(), 1.0 / p);
}

inline double lp_norm(const Field& f, double p, const Window& window) {
  return weighted_lp_norm(f, [](double) { return 1.0; }, p, window);
}

/// Rectangle-rule integral over the whole periodic grid.
inline double integrate(std::span<const double> values, double dx) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * dx;
}

/// `x,value` with 17 significant digits, LF line endings.
inline void write_field_csv(std::ostream& os, const Field& f) {
  os << "x,value\n" << std::setprecision(17);
  const auto& x = f.grid().x();
  for (std::size_t j = 0; j < f.size(); ++j) os << x[j] << ',' << f[j] << '\n';
}

}  // namespace ch2
