#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ch2/dynamics.hpp"
#include "ch2/errors.hpp"
#include "ch2/fit.hpp"
#include "ch2/persistence.hpp"
#include "ch2/weights.hpp"

namespace ch2 {

enum class FarSide { plus, minus };

inline double side_sign(FarSide s) { return s == FarSide::plus ? 1.0 : -1.0; }

struct ConditionValue {
  double sup = 0.0;
  bool bounded = true;
};

/// Grid max of psi(x) (|u|+|u_x|+|u_xx|+|rho|+|rho_x|) over the resolvable
/// window of psi. `bounded` is false when the product still grows at the
/// window edge.
inline ConditionValue check_condition(const State& s, double d) {
  if (!(d > 0.5)) throw DomainError("condition weight needs d > 1/2");
  const SpecWeight psi{psi_weight(d)};
  const Window win = analysis_window(s.grid(), psi);
  const Derivatives z = derivatives(s);
  ConditionValue c;
  c.bounded = !weighted_envelope_diverges(z, psi, win);
  const Grid& g = s.grid();
  for (std::size_t j = 0; j < g.N(); ++j) {
    const double x = g.x()[j];
    if (!win.contains(x)) continue;
    const double e = psi(x) * (std::abs(z.u[j]) + std::abs(z.ux[j]) + std::abs(z.uxx[j]) +
                               std::abs(z.rho[j]) + std::abs(z.rhox[j]));
    c.sup = std::max(c.sup, e);
  }
  return c;
}

/// Largest e^{|y|} admitted into the profile integral. F is quadratic in
/// fields whose absolute round-off is ~1e-15, so e^{|y|} F stays clean well
/// past this point while the true integrand has long since decayed.
inline constexpr double kProfileWeight = 1e12;

inline Window profile_window(const Grid& g) {
  return analysis_window(g, [](double y) { return std::exp(std::abs(y)); }, kProfileWeight);
}

struct PhiValue {
  double value = 0.0;
  bool at_limit = false;  // t = 0: time average of the single instant
};

/// Phi^{+-}(t) = 1/2 int e^{+-y} h(y,t) dy with h the time average of F over
/// [0, t]; trapezoid rule over the stored F snapshots.
inline PhiValue profile_Phi(const Trajectory& traj, double t, FarSide side) {
  const auto idx = traj.index_of(t);
  if (!idx) throw PreconditionError("profile time is not a snapshot time");
  const Grid& g = traj.grid();
  const std::size_t n = g.N();
  std::vector<double> h(n, 0.0);
  PhiValue out;
  if (*idx == 0) {
    out.at_limit = true;
    const auto f0 = traj.sources[0].values();
    std::copy(f0.begin(), f0.end(), h.begin());
  } else {
    for (std::size_t i = 1; i <= *idx; ++i) {
      const double w = 0.5 * (traj.snapshots[i].t - traj.snapshots[i - 1].t);
      const auto a = traj.sources[i - 1].values();
      const auto b = traj.sources[i].values();
      for (std::size_t j = 0; j < n; ++j) h[j] += w * (a[j] + b[j]);
    }
    const double tt = traj.snapshots[*idx].t;
    for (auto& v : h) v /= tt;
  }
  const Window win = profile_window(g);
  const double sgn = side_sign(side);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = g.x()[j];
    if (win.contains(y)) acc += std::exp(sgn * y) * h[j];
  }
  out.value = 0.5 * acc * g.dx();
  return out;
}

/// Far-field window given by distances from the origin: [lo, hi] on the
/// right, [-hi, -lo] on the left.
struct FarWindow {
  double lo = 12.0;
  double hi = 20.0;
};

struct FarFieldEstimate {
  double coefficient = 0.0;
  double residual = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline void require_positive_time(const Trajectory& traj, double t, std::size_t& idx) {
  if (!(t > 0.0)) throw PreconditionError("far-field extraction needs t > 0");
  const auto i = traj.index_of(t);
  if (!i) throw PreconditionError("extraction time is not a snapshot time");
  idx = *i;
}

}  // namespace detail

/// Mean over the window of +-(u - u0) e^{+-x} / t, oriented so that the
/// expected limit is Phi^{+-}(t) > 0; residual is the max deviation from the
/// mean. Samples where e^{-|x|} t Phi falls below 1e-11 are dropped.
inline FarFieldEstimate extract_far_field(const Trajectory& traj, double t, FarSide side,
                                          FarWindow window = {}) {
  std::size_t idx = 0;
  detail::require_positive_time(traj, t, idx);
  const State& s = traj.snapshots[idx];
  const State& s0 = traj.initial();
  const Grid& g = s.grid();
  const double sgn = side_sign(side);
  const double phi = profile_Phi(traj, t, side).value;
  const double level = std::abs(t * phi);
  std::vector<double> vals;
  for (std::size_t j = 0; j < g.N(); ++j) {
    const double x = g.x()[j];
    const double r = sgn * x;
    if (r < window.lo || r > window.hi) continue;
    if (std::exp(-r) * level < 1e-11) continue;
    vals.push_back(sgn * (s.u[j] - s0.u[j]) * std::exp(r) / t);
  }
  if (vals.empty()) {
    if (level == 0.0) return {};
    throw WindowError("no far-field samples above the 1e-11 noise level (t Phi = " +
                      std::to_string(level) + ")");
  }
  FarFieldEstimate e;
  e.samples = vals.size();
  for (double v : vals) e.coefficient += v;
  e.coefficient /= static_cast<double>(vals.size());
  for (double v : vals) e.residual = std::max(e.residual, std::abs(v - e.coefficient));
  return e;
}

/// sup over the window of |rho(x,t) - rho0(x)| e^{|x|} / t.
inline double rho_remainder(const Trajectory& traj, double t, FarSide side,
                            FarWindow window = {}) {
  std::size_t idx = 0;
  detail::require_positive_time(traj, t, idx);
  const State& s = traj.snapshots[idx];
  const State& s0 = traj.initial();
  const Grid& g = s.grid();
  const double sgn = side_sign(side);
  double sup = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < g.N(); ++j) {
    const double r = sgn * g.x()[j];
    if (r < window.lo || r > window.hi) continue;
    any = true;
    sup = std::max(sup, std::abs(s.rho[j] - s0.rho[j]) * std::exp(r) / t);
  }
  if (!any) throw WindowError("rho remainder window contains no grid points");
  return sup;
}

struct ProfileReport {
  double t = 0.0;
  double Phi_plus = 0.0;
  double Phi_minus = 0.0;
  double extracted_plus = std::numeric_limits<double>::quiet_NaN();
  double extracted_minus = std::numeric_limits<double>::quiet_NaN();
  double residual_plus = std::numeric_limits<double>::quiet_NaN();
  double residual_minus = std::numeric_limits<double>::quiet_NaN();
  double rho_remainder_plus = std::numeric_limits<double>::quiet_NaN();
  double rho_remainder_minus = std::numeric_limits<double>::quiet_NaN();
  double c1 = 0.0;
  double c2 = 0.0;
  FarWindow window;
};

inline ProfileReport profile_report(const Trajectory& traj, double t, FarWindow window = {}) {
  ProfileReport r;
  r.t = t;
  r.window = window;
  r.Phi_plus = profile_Phi(traj, t, FarSide::plus).value;
  r.Phi_minus = profile_Phi(traj, t, FarSide::minus).value;
  if (t > 0.0) {
    auto fill = [&](FarSide side, double& coef, double& res, double& rho) {
      try {
        const auto e = extract_far_field(traj, t, side, window);
        coef = e.coefficient;
        res = e.residual;
      } catch (const WindowError&) {
      }
      rho = rho_remainder(traj, t, side, window);
    };
    fill(FarSide::plus, r.extracted_plus, r.residual_plus, r.rho_remainder_plus);
    fill(FarSide::minus, r.extracted_minus, r.residual_minus, r.rho_remainder_minus);
  }
  r.c1 = std::min(r.Phi_plus, r.Phi_minus);
  r.c2 = std::max(r.Phi_plus, r.Phi_minus);
  return r;
}

/// Profile reports at every positive snapshot time, with c1/c2 replaced by
/// the run-wide min/max of Phi^{+-}.
inline std::vector<ProfileReport> profile_series(const Trajectory& traj,
                                                 FarWindow window = {}) {
  std::vector<ProfileReport> out;
  double c1 = std::numeric_limits<double>::infinity(), c2 = 0.0;
  for (const auto& s : traj.snapshots) {
    if (s.t <= 0.0) continue;
    out.push_back(profile_report(traj, s.t, window));
    c1 = std::min({c1, out.back().Phi_plus, out.back().Phi_minus});
    c2 = std::max({c2, out.back().Phi_plus, out.back().Phi_minus});
  }
  for (auto& r : out) {
    r.c1 = c1;
    r.c2 = c2;
  }
  return out;
}

struct PropagationReport {
  double t = 0.0;
  double support_lo = 0.0;
  double support_hi = 0.0;
  double max_outside = 0.0;  // max |u| beyond one unit outside the support
  double fitted_rate = 0.0;  // -slope of log|u| on the right tail
  std::size_t fit_points = 0;
  bool vacuous = false;
  bool pass = false;
};

/// Looks at the first positive snapshot of a compactly supported datum:
/// u must be non-negligible beyond the support and its right tail must
/// decay like e^{-x}.
inline PropagationReport infinite_propagation_check(const Trajectory& traj,
                                                    double detect_level = 1e-10) {
  PropagationReport r;
  const State& s0 = traj.initial();
  const Grid& g = s0.grid();
  bool any = false;
  for (std::size_t j = 0; j < g.N(); ++j) {
    if (s0.u[j] != 0.0 || s0.rho[j] != 0.0) {
      if (!any) r.support_lo = g.x()[j];
      r.support_hi = g.x()[j];
      any = true;
    }
  }
  if (!any) {
    r.vacuous = true;
    r.pass = true;
    return r;
  }
  if (traj.size() < 2) throw PreconditionError("need a snapshot at positive time");
  const State& s = traj.snapshots[1];
  r.t = s.t;
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < g.N(); ++j) {
    const double x = g.x()[j];
    const bool outside = x > r.support_hi + 1.0 || x < r.support_lo - 1.0;
    if (!outside) continue;
    const double a = std::abs(s.u[j]);
    r.max_outside = std::max(r.max_outside, a);
    if (x > r.support_hi + 1.0 && x < g.L() - 10.0 && a > kEnvelopeFloor) {
      xs.push_back(x);
      ys.push_back(std::log(a));
    }
  }
  if (xs.size() >= 2) {
    const LineFit f = fit_line(xs, ys);
    r.fitted_rate = -f.slope;
    r.fit_points = f.points;
  }
  r.pass = r.max_outside > detect_level && r.fit_points >= 2 &&
           std::abs(r.fitted_rate - 1.0) <= 0.05;
  return r;
}

struct Corollary2Options {
  std::vector<double> times{0.25, 0.5, 1.0};
  FarWindow extraction{12.0, 20.0};
  std::vector<FarWindow> rho_windows{{12.0, 16.0}, {16.0, 20.0}, {20.0, 24.0}};
  double match_tolerance = 0.1;
  double psi_d = 1.0;
};

struct Corollary2Report {
  std::vector<ProfileReport> profiles;             // one per requested time
  std::vector<std::vector<double>> rho_plus;       // per time, per window
  std::vector<std::vector<double>> rho_minus;
  std::vector<double> condition_times;
  std::vector<double> condition_values;
  bool condition_bounded = true;
  bool vacuous = false;
  bool pass = false;
};

/// Coefficient match, positivity of Phi on both sides, outward decrease of
/// the rho remainder and a bounded condition value at every snapshot.
inline Corollary2Report verify_corollary2(const Trajectory& traj,
                                          const Corollary2Options& opt = {}) {
  Corollary2Report r;
  const State& s0 = traj.initial();
  r.vacuous = s0.u.max_abs() == 0.0 && s0.rho.max_abs() == 0.0;
  bool ok = true;
  for (const auto& s : traj.snapshots) {
    const ConditionValue c = check_condition(s, opt.psi_d);
    r.condition_times.push_back(s.t);
    r.condition_values.push_back(c.sup);
    if (!c.bounded || !std::isfinite(c.sup)) r.condition_bounded = false;
  }
  ok = ok && r.condition_bounded;
  for (double t : opt.times) {
    const ProfileReport p = profile_report(traj, t, opt.extraction);
    r.profiles.push_back(p);
    std::vector<double> plus, minus;
    for (const auto& w : opt.rho_windows) {
      plus.push_back(rho_remainder(traj, t, FarSide::plus, w));
      minus.push_back(rho_remainder(traj, t, FarSide::minus, w));
    }
    if (!r.vacuous) {
      ok = ok && p.Phi_plus > 0.0 && p.Phi_minus > 0.0;
      ok = ok && std::isfinite(p.extracted_plus) &&
           std::abs(p.extracted_plus - p.Phi_plus) <= opt.match_tolerance * p.Phi_plus;
      for (std::size_t i = 1; i < plus.size(); ++i) {
        ok = ok && plus[i] < plus[i - 1] && minus[i] < minus[i - 1];
      }
    }
    r.rho_plus.push_back(std::move(plus));
    r.rho_minus.push_back(std::move(minus));
  }
  r.pass = ok;
  return r;
}

}  // namespace ch2
