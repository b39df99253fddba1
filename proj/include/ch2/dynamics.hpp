#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ch2/errors.hpp"
#include "ch2/fft.hpp"
#include "ch2/grid.hpp"
#include "ch2/spectral.hpp"

namespace ch2 {

/// Solution pair z = (u, rho) at time t.
struct State {
  Field u;
  Field rho;
  double t = 0.0;

  const Grid& grid() const { return u.grid(); }
  bool valid() const { return u.valid() && rho.valid() && u.same_grid(rho); }
};

inline State make_state(Field u, Field rho, double t = 0.0) {
  require_same_grid(u, rho);
  return {std::move(u), std::move(rho), t};
}

struct Diagnostics {
  double t = 0.0;
  double M_t = 0.0;      // |u|_inf + |u_x|_inf + |u_xx|_inf + |rho|_inf + |rho_x|_inf
  double H1 = 0.0;       // 1/2 int (u m + rho^2)
  double H2 = 0.0;       // 1/2 int (u rho^2 + u^3 + u u_x^2)
  double min_mx = 0.0;   // min of m = u - u_xx
  double tail_max = 0.0; // max |u|, |rho| on |x| >= 0.95 L
  double ux_max = 0.0;
};

/// Spatial derivatives needed by the norms and diagnostics.
struct Derivatives {
  Field u, ux, uxx, rho, rhox;
};

inline Derivatives derivatives(const State& s) {
  return {s.u, derivative(s.u), second_derivative(s.u), s.rho,
          derivative(s.rho)};
}

inline Diagnostics diagnostics(const State& s) {
  Diagnostics d;
  d.t = s.t;
  const Derivatives z = derivatives(s);
  const Grid& g = s.grid();
  const std::size_t n = g.N();
  double h1 = 0.0, h2 = 0.0;
  double min_m = std::numeric_limits<double>::infinity();
  double tail = 0.0;
  const double edge = 0.95 * g.L();
  for (std::size_t j = 0; j < n; ++j) {
    const double u = z.u[j], ux = z.ux[j], r = z.rho[j];
    const double m = u - z.uxx[j];
    h1 += u * m + r * r;
    h2 += u * r * r + u * u * u + u * ux * ux;
    min_m = std::min(min_m, m);
    if (std::abs(g.x()[j]) >= edge) {
      tail = std::max({tail, std::abs(u), std::abs(r)});
    }
  }
  d.H1 = 0.5 * h1 * g.dx();
  d.H2 = 0.5 * h2 * g.dx();
  d.min_mx = min_m;
  d.tail_max = tail;
  d.ux_max = z.ux.max_abs();
  d.M_t = z.u.max_abs() + d.ux_max + z.uxx.max_abs() + z.rho.max_abs() +
          z.rhox.max_abs();
  if (!s.valid()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    d.M_t = d.H1 = d.H2 = d.min_mx = d.tail_max = d.ux_max = nan;
  }
  return d;
}

/// F(u, rho) = u^2 + u_x^2/2 + rho^2/2 evaluated pointwise, which keeps the
/// far-field samples relatively accurate.
inline Field source_F(const State& s) {
  const Field ux = derivative(s.u);
  std::vector<double> f(s.u.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    f[j] = s.u[j] * s.u[j] + 0.5 * ux[j] * ux[j] + 0.5 * s.rho[j] * s.rho[j];
  }
  return Field(s.u.grid_ptr(), std::move(f));
}

namespace detail {

// Zero-pad N-point coefficients to the 3N/2 grid and sample there.
inline std::vector<double> padded_values(const Spectrum& c, std::size_t n) {
  const std::size_t big = 3 * n / 2;
  Spectrum p(big / 2 + 1, cplx{});
  // Nyquist of the coarse grid is dropped; it carries no resolved content.
  for (std::size_t m = 0; m < n / 2; ++m) p[m] = c[m];
  return from_spectrum(std::move(p), big);
}

// Coefficients of fine-grid samples truncated back to the N-point spectrum.
inline Spectrum truncated_spectrum(const std::vector<double>& fine, std::size_t n) {
  Spectrum full = to_spectrum(fine);
  Spectrum out(n / 2 + 1, cplx{});
  for (std::size_t m = 0; m < n / 2; ++m) out[m] = full[m];
  return out;
}

}  // namespace detail

struct Rates {
  Field du;
  Field drho;
};

/// Right-hand side of the nonlocal system
///   u_t = -u u_x + P(D) F,   rho_t = -u rho_x - rho u_x.
/// The quadratic terms of the u equation are dealiased by 3/2 zero padding.
/// The rho transport terms are formed pointwise: they are products with
/// the local field, and keeping them local preserves the relative accuracy
/// of the exponentially small far-field samples of rho.
inline Rates rhs(const State& s) {
  if (!s.valid()) {
    return {Field::poisoned(s.u.grid_ptr()), Field::poisoned(s.u.grid_ptr())};
  }
  const Grid& g = s.grid();
  const std::size_t n = g.N();
  const std::size_t half = n / 2;

  const Spectrum u_hat = to_spectrum(s.u.values());
  const Spectrum rho_hat = to_spectrum(s.rho.values());
  Spectrum ux_hat(u_hat.size()), rhox_hat(rho_hat.size());
  for (std::size_t m = 0; m < u_hat.size(); ++m) {
    const cplx ik = m == half ? cplx{} : cplx{0.0, g.wavenumber(m)};
    ux_hat[m] = ik * u_hat[m];
    rhox_hat[m] = ik * rho_hat[m];
  }

  const auto u_f = detail::padded_values(u_hat, n);
  const auto ux_f = detail::padded_values(ux_hat, n);
  const auto rho_f = detail::padded_values(rho_hat, n);
  std::vector<double> F_f(u_f.size()), adv_f(u_f.size());
  for (std::size_t j = 0; j < u_f.size(); ++j) {
    F_f[j] = u_f[j] * u_f[j] + 0.5 * ux_f[j] * ux_f[j] + 0.5 * rho_f[j] * rho_f[j];
    adv_f[j] = u_f[j] * ux_f[j];
  }
  const Spectrum F_hat = detail::truncated_spectrum(F_f, n);
  const Spectrum adv_hat = detail::truncated_spectrum(adv_f, n);

  Spectrum du_hat(u_hat.size());
  for (std::size_t m = 0; m < du_hat.size(); ++m) {
    const double k = g.wavenumber(m);
    const cplx pd = m == half ? cplx{} : cplx{0.0, -k / (1.0 + k * k)};
    du_hat[m] = -adv_hat[m] + pd * F_hat[m];
  }
  Field du(s.u.grid_ptr(), from_spectrum(std::move(du_hat), n));

  const auto ux = from_spectrum(ux_hat, n);
  const auto rhox = from_spectrum(rhox_hat, n);
  std::vector<double> drho(n);
  for (std::size_t j = 0; j < n; ++j) {
    drho[j] = -s.u[j] * rhox[j] - s.rho[j] * ux[j];
  }
  return {std::move(du), Field(s.u.grid_ptr(), std::move(drho))};
}

namespace detail {

inline Field axpy(const Field& y, double a, const Field& x) {
  std::vector<double> out(y.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = y[j] + a * x[j];
  return Field(y.grid_ptr(), std::move(out));
}

inline bool finite(const Rates& r) { return r.du.valid() && r.drho.valid(); }

}  // namespace detail

/// Classical four-stage Runge-Kutta step. Throws BlowUpError carrying the
/// stage time when a stage goes non-finite.
inline State step_rk4(const State& s, double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  auto check = [&](const Rates& r, double t) {
    if (!detail::finite(r)) {
      std::ostringstream os;
      os << "non-finite stage at t = " << t;
      throw BlowUpError(os.str(), t);
    }
  };
  using detail::axpy;
  const Rates k1 = rhs(s);
  check(k1, s.t);
  const Rates k2 = rhs({axpy(s.u, 0.5 * dt, k1.du), axpy(s.rho, 0.5 * dt, k1.drho),
                        s.t + 0.5 * dt});
  check(k2, s.t + 0.5 * dt);
  const Rates k3 = rhs({axpy(s.u, 0.5 * dt, k2.du), axpy(s.rho, 0.5 * dt, k2.drho),
                        s.t + 0.5 * dt});
  check(k3, s.t + 0.5 * dt);
  const Rates k4 =
      rhs({axpy(s.u, dt, k3.du), axpy(s.rho, dt, k3.drho), s.t + dt});
  check(k4, s.t + dt);

  const std::size_t n = s.u.size();
  std::vector<double> u(n), r(n);
  const double w = dt / 6.0;
  for (std::size_t j = 0; j < n; ++j) {
    u[j] = s.u[j] + w * (k1.du[j] + 2.0 * k2.du[j] + 2.0 * k3.du[j] + k4.du[j]);
    r[j] = s.rho[j] +
           w * (k1.drho[j] + 2.0 * k2.drho[j] + 2.0 * k3.drho[j] + k4.drho[j]);
  }
  State next{Field(s.u.grid_ptr(), std::move(u)), Field(s.u.grid_ptr(), std::move(r)),
             s.t + dt};
  if (!next.valid()) {
    std::ostringstream os;
    os << "non-finite state at t = " << next.t;
    throw BlowUpError(os.str(), next.t);
  }
  return next;
}

/// exp(-36 (k/k_max)^36) applied to both components.
inline State spectral_filter(const State& s) {
  const double kmax = s.grid().k_max();
  auto sym = [kmax](double k, bool) {
    return cplx{std::exp(-36.0 * std::pow(k / kmax, 36.0))};
  };
  return {apply_symbol(s.u, sym), apply_symbol(s.rho, sym), s.t};
}

struct EvolveControls {
  double output_stride = 0.01;
  double cfl = 0.3;
  int cfl_every = 10;
  std::optional<double> fixed_dt;  // bypasses the CFL policy
  double blowup_ux = 1e4;
  // A conservative grid flow keeps |u_x|_inf below ~sqrt(2 H1 / dx), so wave
  // breaking shows up first as energy piling into the top decade of modes.
  double breakdown_tail = 1e-4;
  double tail_tolerance = 1e-12;
  bool check_resolution = true;
  double resolution_tolerance = 1e-10;
  bool filter = false;
};

struct Trajectory {
  std::vector<State> snapshots;
  std::vector<Diagnostics> diagnostics;
  std::vector<Field> sources;  // F(u, rho) at each snapshot
  EvolveControls controls;
  double T_end = 0.0;
  std::optional<double> blowup_time;
  std::string blowup_reason;

  bool completed() const { return !blowup_time.has_value(); }
  std::size_t size() const { return snapshots.size(); }
  const State& initial() const { return snapshots.front(); }
  const Grid& grid() const { return snapshots.front().grid(); }

  /// Index of the snapshot at time t (to 1e-9 relative), if any.
  std::optional<std::size_t> index_of(double t) const {
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
      if (std::abs(snapshots[i].t - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
        return i;
      }
    }
    return std::nullopt;
  }

  void push(State s) {
    diagnostics.push_back(ch2::diagnostics(s));
    sources.push_back(source_F(s));
    snapshots.push_back(std::move(s));
  }
};

inline double cfl_step(const State& s, const EvolveControls& c) {
  return c.cfl * s.grid().dx() / std::max(1.0, s.u.max_abs());
}

/// Integrate from `initial` to T_end, storing snapshots at multiples of the
/// output stride (and at T_end). Stops early and records the time when
/// ||u_x||_inf exceeds the blow-up threshold or a stage goes non-finite.
inline Trajectory evolve(const State& initial, double T_end,
                         const EvolveControls& controls = {}) {
  if (!initial.valid()) throw PreconditionError("initial state is not valid");
  if (!(T_end >= 0.0) || !std::isfinite(T_end)) {
    throw DomainError("T_end must be finite and >= 0");
  }
  if (!(controls.output_stride > 0.0)) {
    throw DomainError("output stride must be positive");
  }
  if (controls.check_resolution) {
    const double tail = std::max(spectral_tail(initial.u), spectral_tail(initial.rho));
    if (tail > controls.resolution_tolerance) {
      std::ostringstream os;
      os << "initial datum under-resolved: top-decade spectral content " << tail
         << " exceeds " << controls.resolution_tolerance;
      throw PreconditionError(os.str());
    }
  }

  Trajectory traj;
  traj.controls = controls;
  traj.T_end = T_end;

  auto assert_tail = [&](const Diagnostics& d) {
    if (d.tail_max >= controls.tail_tolerance) {
      std::ostringstream os;
      os << "domain too small: tail amplitude " << d.tail_max << " at t = " << d.t
         << " exceeds " << controls.tail_tolerance;
      throw DomainTooSmallError(os.str(), d.t);
    }
  };

  State s = initial;
  traj.push(s);
  assert_tail(traj.diagnostics.back());

  const auto outputs = static_cast<std::size_t>(
      std::ceil(T_end / controls.output_stride - 1e-9));
  double dt_cfl = cfl_step(s, controls);
  long steps = 0;
  for (std::size_t k = 1; k <= outputs; ++k) {
    const double target =
        std::min(T_end, static_cast<double>(k) * controls.output_stride);
    try {
      while (target - s.t > 1e-12 * std::max(1.0, target)) {
        double dt_max;
        if (controls.fixed_dt) {
          dt_max = *controls.fixed_dt;
        } else {
          if (steps % controls.cfl_every == 0) dt_cfl = cfl_step(s, controls);
          dt_max = dt_cfl;
        }
        const double remaining = target - s.t;
        const double pieces = std::ceil(remaining / dt_max - 1e-9);
        const double dt = pieces <= 1.0 ? remaining : remaining / pieces;
        s = step_rk4(s, dt);
        if (controls.filter) s = spectral_filter(s);
        ++steps;
        const double ux = derivative(s.u).max_abs();
        if (ux > controls.blowup_ux) {
          std::ostringstream os;
          os << "|u_x|_inf = " << ux << " exceeds " << controls.blowup_ux;
          throw BlowUpError(os.str(), s.t);
        }
        if (const double tail = spectral_tail(s.u); tail > controls.breakdown_tail) {
          std::ostringstream os;
          os << "resolution lost: top-decade spectral content " << tail << " exceeds "
             << controls.breakdown_tail << " (|u_x|_inf = " << ux << ")";
          throw BlowUpError(os.str(), s.t);
        }
      }
    } catch (const BlowUpError& e) {
      traj.blowup_time = e.time();
      traj.blowup_reason = e.what();
      return traj;
    }
    s.t = target;
    traj.push(s);
    assert_tail(traj.diagnostics.back());
  }
  return traj;
}

// ---------------------------------------------------------------------------
// initial data

enum class Preset { sech, gaussian, bump, zero };

inline double sech(double x) { return 1.0 / std::cosh(x); }

/// exp(-1/(1-x^2)) on |x| < 1, zero elsewhere.
inline double bump(double x) {
  const double q = 1.0 - x * x;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

inline double preset_profile(Preset p, double x) {
  switch (p) {
    case Preset::sech:
      return sech(x);
    case Preset::gaussian:
      return std::exp(-x * x);
    case Preset::bump:
      return bump(x);
    case Preset::zero:
      return 0.0;
  }
  return 0.0;
}

inline State make_preset(Preset p, const GridPtr& grid, double amplitude_u,
                         double amplitude_rho) {
  auto u = Field::sample(grid, [&](double x) { return amplitude_u * preset_profile(p, x); });
  auto r = Field::sample(grid, [&](double x) { return amplitude_rho * preset_profile(p, x); });
  return make_state(std::move(u), std::move(r), 0.0);
}

inline std::string to_string(Preset p) {
  switch (p) {
    case Preset::sech:
      return "sech";
    case Preset::gaussian:
      return "gaussian";
    case Preset::bump:
      return "bump";
    case Preset::zero:
      return "zero";
  }
  return "?";
}

/// Reflect through x = 0 with u -> -u; maps solutions to solutions.
inline State reflect(const State& s) {
  const Grid& g = s.grid();
  std::vector<double> u(g.N()), r(g.N());
  for (std::size_t j = 0; j < g.N(); ++j) {
    u[j] = -s.u[g.mirror(j)];
    r[j] = s.rho[g.mirror(j)];
  }
  return {Field(s.u.grid_ptr(), std::move(u)), Field(s.u.grid_ptr(), std::move(r)), s.t};
}

}  // namespace ch2
