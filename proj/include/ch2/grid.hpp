#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ch2/errors.hpp"

namespace ch2 {

/// Uniform periodic grid on the truncated line [-L, L).
///
/// Sample j sits at x_j = -L + j*dx with dx = 2L/N. Wavenumbers follow the
/// usual FFT ordering (0, 1, ..., N/2-1, -N/2, ..., -1) scaled by pi/L.
class Grid {
 public:
  Grid(double half_width, std::size_t points) : L_(half_width), N_(points) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
      throw DomainError("grid half-width must be positive and finite");
    }
    if (points < 16 || (points & (points - 1)) != 0) {
      throw DomainError("grid size must be a power of two >= 16, got " +
                        std::to_string(points));
    }
    dx_ = 2.0 * L_ / static_cast<double>(N_);
    x_.resize(N_);
    k_.resize(N_);
    const double k0 = std::numbers::pi / L_;
    const auto n = static_cast<std::ptrdiff_t>(N_);
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      x_[j] = -L_ + static_cast<double>(j) * dx_;
      const std::ptrdiff_t m = j < n / 2 ? j : j - n;
      k_[j] = k0 * static_cast<double>(m);
    }
  }

  double L() const noexcept { return L_; }
  std::size_t N() const noexcept { return N_; }
  double dx() const noexcept { return dx_; }
  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<double>& k() const noexcept { return k_; }

  /// Wavenumber of half-spectrum mode m (0 <= m <= N/2).
  double wavenumber(std::size_t m) const noexcept {
    return std::numbers::pi / L_ * static_cast<double>(m);
  }
  double k_max() const noexcept { return wavenumber(N_ / 2); }
  std::size_t modes() const noexcept { return N_ / 2 + 1; }

  /// Index of the grid point mirrored through x = 0.
  std::size_t mirror(std::size_t j) const noexcept {
    return (N_ - j) % N_;
  }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.L_ == b.L_ && a.N_ == b.N_;
  }

 private:
  double L_;
  std::size_t N_;
  double dx_;
  std::vector<double> x_;
  std::vector<double> k_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(double half_width, std::size_t points) {
  return std::make_shared<const Grid>(half_width, points);
}

/// Real samples on a grid. Non-finite entries mark the field invalid; every
/// operation on an invalid field returns a poisoned (all-NaN) result.
class Field {
 public:
  Field() = default;
  Field(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ShapeError("field without grid");
    if (values_.size() != grid_->N()) {
      throw ShapeError("field has " + std::to_string(values_.size()) +
                       " samples, grid has " + std::to_string(grid_->N()));
    }
  }

  static Field zeros(GridPtr grid) {
    const auto n = grid->N();
    return Field(std::move(grid), std::vector<double>(n, 0.0));
  }

  static Field constant(GridPtr grid, double value) {
    const auto n = grid->N();
    return Field(std::move(grid), std::vector<double>(n, value));
  }

  template <class Fn>
  static Field sample(GridPtr grid, Fn&& fn) {
    std::vector<double> v(grid->N());
    const auto& x = grid->x();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = fn(x[j]);
    return Field(std::move(grid), std::move(v));
  }

  static Field poisoned(GridPtr grid) {
    return constant(std::move(grid), std::numeric_limits<double>::quiet_NaN());
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const noexcept { return values_[j]; }

  bool valid() const noexcept {
    return grid_ && std::all_of(values_.begin(), values_.end(),
                                [](double v) { return std::isfinite(v); });
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  bool same_grid(const Field& other) const noexcept {
    return grid_ && other.grid_ &&
           (grid_ == other.grid_ || *grid_ == *other.grid_);
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const Field& a, const Field& b) {
  if (!a.same_grid(b)) throw ShapeError("fields live on different grids");
}

/// Closed sub-interval [lo, hi] of the computational domain.
struct Window {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  double width() const noexcept { return hi - lo; }
};

/// [-L + margin, L - margin]; keeps norms away from the wrap-around zone.
inline Window standard_window(const Grid& grid, double margin = 5.0) {
  const double half = grid.L() - margin;
  if (!(half > 0.0)) throw DomainError("window margin exceeds the domain");
  return {-half, half};
}

}  // namespace ch2
