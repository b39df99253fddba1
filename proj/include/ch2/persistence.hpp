#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ch2/dynamics.hpp"
#include "ch2/errors.hpp"
#include "ch2/fit.hpp"
#include "ch2/spectral.hpp"
#include "ch2/weights.hpp"

namespace ch2 {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Largest weight value admitted into a weighted norm. Spectral derivatives
/// carry an absolute round-off floor near 1e-13, so beyond this the product
/// w * f measures noise rather than the solution.
inline constexpr double kResolvableWeight = 1e8;

/// Standard window shrunk, side by side, to the connected region around the
/// origin where w(x) <= w_max.
template <class WeightFn>
Window analysis_window(const Grid& g, WeightFn&& w, double w_max = kResolvableWeight,
                       double margin = 5.0) {
  const Window std_win = standard_window(g, margin);
  auto fits = [&](double x) {
    try {
      return w(x) <= w_max;
    } catch (const RangeError&) {
      return false;
    }
  };
  const auto& x = g.x();
  const std::size_t zero = g.N() / 2;  // x[zero] == 0
  if (!fits(0.0)) throw DomainError("weight exceeds the resolvable bound at x = 0");
  Window win{0.0, 0.0};
  for (std::size_t j = zero; j < g.N() && std_win.contains(x[j]) && fits(x[j]); ++j) {
    win.hi = x[j];
  }
  for (std::size_t j = zero + 1; j-- > 0 && std_win.contains(x[j]) && fits(x[j]);) {
    win.lo = x[j];
  }
  return win;
}

enum Component : std::size_t { kU = 0, kUx, kUxx, kRho, kRhox };
inline constexpr std::array<const char*, 5> kComponentNames = {"u", "ux", "uxx", "rho",
                                                               "rhox"};

struct QuintupleNorm {
  std::array<double, 5> parts{};  // ||w u||, ||w u_x||, ||w u_xx||, ||w rho||, ||w rho_x||
  double total = 0.0;
  bool divergent = false;
};

/// True when the pointwise envelope sum_k |w f_k| peaks in the outer tenth
/// of the window at more than 1.5x its interior maximum, i.e. the weight
/// outgrows the decay of the data.
template <class WeightFn>
bool weighted_envelope_diverges(const Derivatives& z, WeightFn&& w, const Window& win) {
  const Grid& g = z.u.grid();
  const double band = 0.1 * win.width();
  double inner = 0.0, outer = 0.0;
  for (std::size_t j = 0; j < g.N(); ++j) {
    const double x = g.x()[j];
    if (!win.contains(x)) continue;
    const double e = w(x) * (std::abs(z.u[j]) + std::abs(z.ux[j]) + std::abs(z.uxx[j]) +
                             std::abs(z.rho[j]) + std::abs(z.rhox[j]));
    if (!std::isfinite(e)) return true;
    if (x < win.lo + band || x > win.hi - band) {
      outer = std::max(outer, e);
    } else {
      inner = std::max(inner, e);
    }
  }
  return outer > 1.5 * inner;
}

template <class WeightFn>
QuintupleNorm quintuple_norm_parts(const Derivatives& z, WeightFn&& w, double p,
                                   const Window& win) {
  QuintupleNorm q;
  if (weighted_envelope_diverges(z, w, win)) {
    q.divergent = true;
    q.parts.fill(kInf);
    q.total = kInf;
    return q;
  }
  const std::array<const Field*, 5> f = {&z.u, &z.ux, &z.uxx, &z.rho, &z.rhox};
  for (std::size_t k = 0; k < 5; ++k) {
    q.parts[k] = weighted_lp_norm(*f[k], w, p, win);
    q.total += q.parts[k];
  }
  if (!std::isfinite(q.total)) {
    q.divergent = true;
    q.total = kInf;
  }
  return q;
}

/// ||w u||_p + ||w u_x||_p + ||w u_xx||_p + ||w rho||_p + ||w rho_x||_p over
/// the window; +infinity when the weighted data does not decay.
template <class WeightFn>
double quintuple_norm(const State& s, WeightFn&& w, double p, const Window& win) {
  return quintuple_norm_parts(derivatives(s), w, p, win).total;
}

template <class WeightFn>
double quintuple_norm(const State& s, WeightFn&& w, double p) {
  return quintuple_norm(s, w, p, analysis_window(s.grid(), w));
}

struct GronwallConstants {
  double C2 = 0.0;  // ||phi (G_x * F)||_p <= C2 ||phi F||_p
  double C3 = 0.0;  // ||phi (G_xx * F)||_p <= C3 ||phi F||_p
  double C5 = 0.0;  // coefficient of the u_xx inequality
  double C = 0.0;   // aggregate constant of the Gronwall bound
};

/// Constants traced through the energy estimates of the five components.
/// The aggregate adds the largest coefficient of every inequality, with the
/// rho inequality contributing both of its unit coefficients.
inline GronwallConstants gronwall_constants(const ModerateCertificate& cert) {
  GronwallConstants g;
  g.C2 = cert.c_mod * cert.dGv_l1;
  g.C3 = cert.c_mod * cert.Gv_l1 + 1.0;
  g.C5 = std::max(cert.A + 4.0, 2.0 + g.C2);
  g.C = (g.C2 + 1.0) + (g.C3 + 1.0) + g.C5 + 2.0 + (3.0 + cert.A);
  return g;
}

inline double gronwall_constant(const ModerateCertificate& cert) {
  return gronwall_constants(cert).C;
}

inline double run_M(const Trajectory& traj) {
  double M = 0.0;
  for (const auto& d : traj.diagnostics) M = std::max(M, d.M_t);
  return M;
}

struct PersistenceReport {
  std::vector<double> times;
  std::vector<double> N_p;
  std::vector<double> bound;
  std::vector<double> margin;
  double M = 0.0;
  double C_used = 0.0;
  double p = 2.0;
  WeightSpec weight;
  Window window;
  bool infinite_norm = false;
  bool pass = false;
};

struct PersistenceOptions {
  std::optional<Window> window;  // defaults to analysis_window of the weight
  double box = 40.0;
  std::size_t samples = 801;
};

/// Checks N_p(t) <= e^{C M t} N_p(0) at every snapshot with the traced C.
inline PersistenceReport verify_theorem1(const Trajectory& traj, const WeightSpec& spec,
                                         double p, const PersistenceOptions& opt = {}) {
  const ModerateCertificate cert = certify(spec, opt.box, opt.samples);
  PersistenceReport r;
  r.p = p;
  r.weight = spec;
  r.C_used = gronwall_constant(cert);
  r.M = run_M(traj);
  const SpecWeight w{spec};
  r.window = opt.window.value_or(analysis_window(traj.grid(), w));
  r.pass = true;
  for (const auto& s : traj.snapshots) {
    r.times.push_back(s.t);
    r.N_p.push_back(quintuple_norm(s, w, p, r.window));
  }
  if (!std::isfinite(r.N_p.front())) {
    throw PreconditionError("initial weighted norm is infinite; persistence hypotheses unmet");
  }
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double b = std::exp(r.C_used * r.M * r.times[i]) * r.N_p.front();
    r.bound.push_back(b);
    r.margin.push_back(b - r.N_p[i]);
    if (!std::isfinite(r.N_p[i])) {
      r.infinite_norm = true;
      r.pass = false;
    } else if (r.margin.back() < -1e-9 * b) {
      r.pass = false;
    }
  }
  return r;
}

struct InequalityComponent {
  std::string name;
  double worst_violation = -kInf;  // max over times of (lhs - rhs) / scale
  double worst_time = 0.0;
  bool holds = true;
};

struct DiffIneqReport {
  bool refused = false;
  std::string reason;
  std::array<InequalityComponent, 5> components;
  std::vector<double> times;                 // interior snapshot times
  std::vector<std::array<double, 5>> lhs;    // centered d/dt of each norm
  std::vector<std::array<double, 5>> rhs;
  GronwallConstants constants;
  double A = 0.0;
  double p = 2.0;
  WeightSpec weight;
  bool pass = false;
};

struct DiffIneqOptions {
  std::optional<Window> window;
  double max_stride = 1e-2;
  double tolerance = 1e-6;
  double box = 40.0;
  std::size_t samples = 801;
};

/// Per-component check of the five differential inequalities with the
/// instantaneous M_t; time derivatives by centered differences.
inline DiffIneqReport verify_differential_inequalities(const Trajectory& traj,
                                                       const WeightSpec& spec, double p,
                                                       const DiffIneqOptions& opt = {}) {
  DiffIneqReport r;
  r.p = p;
  r.weight = spec;
  for (std::size_t k = 0; k < 5; ++k) r.components[k].name = kComponentNames[k];
  if (traj.size() < 3) {
    r.refused = true;
    r.reason = "need at least three snapshots";
    return r;
  }
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double h = traj.snapshots[i].t - traj.snapshots[i - 1].t;
    if (h > opt.max_stride * (1.0 + 1e-9)) {
      r.refused = true;
      r.reason = "snapshot stride " + std::to_string(h) + " exceeds " +
                 std::to_string(opt.max_stride);
      return r;
    }
  }
  const ModerateCertificate cert = certify(spec, opt.box, opt.samples);
  r.constants = gronwall_constants(cert);
  r.A = cert.A;
  const SpecWeight w{spec};
  const Window win = opt.window.value_or(analysis_window(traj.grid(), w));

  std::vector<QuintupleNorm> norms;
  norms.reserve(traj.size());
  for (const auto& s : traj.snapshots) {
    norms.push_back(quintuple_norm_parts(derivatives(s), w, p, win));
    if (norms.back().divergent) {
      throw PreconditionError("weighted norm is infinite at t = " + std::to_string(s.t));
    }
  }
  const double floor = 1e-12 * std::max(norms.front().total, 1e-300);
  const auto& G = r.constants;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const double t = traj.snapshots[i].t;
    const double dt = traj.snapshots[i + 1].t - traj.snapshots[i - 1].t;
    const double M = traj.diagnostics[i].M_t;
    const auto& n = norms[i].parts;
    std::array<double, 5> lhs{}, rhs{};
    for (std::size_t k = 0; k < 5; ++k) {
      lhs[k] = (norms[i + 1].parts[k] - norms[i - 1].parts[k]) / dt;
    }
    const double base = n[kU] + n[kUx] + n[kRho];
    rhs[kU] = (G.C2 + 1.0) * M * base;
    rhs[kUx] = (G.C3 + 1.0) * M * base;
    rhs[kUxx] = G.C5 * M * (base + n[kUxx]);
    rhs[kRho] = M * (n[kRho] + n[kRhox]);
    rhs[kRhox] = M * n[kRho] + (3.0 + cert.A) * M * n[kRhox];
    for (std::size_t k = 0; k < 5; ++k) {
      auto& c = r.components[k];
      const double scale = std::max(rhs[k], floor);
      const double v = (lhs[k] - rhs[k]) / scale;
      if (v > c.worst_violation) {
        c.worst_violation = v;
        c.worst_time = t;
      }
      if (lhs[k] > rhs[k] + opt.tolerance * scale) c.holds = false;
    }
    r.times.push_back(t);
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
  }
  r.pass = std::all_of(r.components.begin(), r.components.end(),
                       [](const InequalityComponent& c) { return c.holds; });
  return r;
}

/// Companion for the two-tier bound. Within the admissible range this is
/// companion_v; for a = b = 1 with c < 0 the weight serves as its own
/// companion, moderate on any bounded box.
inline WeightSpec corollary1_companion(const WeightSpec& spec) {
  if (is_admissible(spec)) return companion_v(spec);
  if (finite_params(spec) && spec.a == 1.0 && spec.b == 1.0 && spec.c < 0.0) {
    WeightSpec v = spec;
    v.side = Side::both;
    return v;
  }
  throw AdmissibilityError("two-tier bound needs ab < 1, or a = b = 1 with c < 0");
}

/// Membership of v e^{-|x|} in L_p for a companion of the form above.
inline bool v_decay_in_Lp(const WeightSpec& v, double p) {
  if (v.a * v.b < 1.0 || v.b < 1.0) return true;
  // v e^{-|x|} = e^{(a-1)|x|} (1+|x|)^c (log(e+|x|))^d with a = b = 1.
  if (v.a > 1.0) return false;
  if (std::isinf(p)) return v.c < 0.0 || (v.c == 0.0 && v.d <= 0.0);
  return v.c * p < -1.0 || (v.c * p == -1.0 && v.d * p < -1.0);
}

/// N(t) ~ alpha e^{tau t} + beta, least squares over a tau grid.
struct GrowthFit {
  double alpha = 0.0;
  double tau = 0.0;
  double beta = 0.0;
  double rms = 0.0;
};

inline GrowthFit fit_growth(std::span<const double> t, std::span<const double> y) {
  GrowthFit best;
  best.rms = kInf;
  if (t.size() < 3) return best;
  for (int i = -400; i <= 400; ++i) {
    const double tau = 0.025 * i;
    if (tau == 0.0) continue;
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double e = std::exp(tau * t[j]);
      s11 += e * e;
      s12 += e;
      s22 += 1.0;
      b1 += e * y[j];
      b2 += y[j];
    }
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-14 * s11 * s22) continue;
    const double alpha = (b1 * s22 - b2 * s12) / det;
    const double beta = (s11 * b2 - s12 * b1) / det;
    double ss = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double d = alpha * std::exp(tau * t[j]) + beta - y[j];
      ss += d * d;
    }
    const double rms = std::sqrt(ss / static_cast<double>(t.size()));
    if (rms < best.rms) best = {alpha, tau, beta, rms};
  }
  return best;
}

struct Corollary1Report {
  std::vector<double> times;
  std::vector<double> tier1;  // (phi, p) quintuple norm
  std::vector<double> tier2;  // (phi^{1/2}, 2) quintuple norm
  GrowthFit fit1, fit2;
  double sup1 = 0.0, sup2 = 0.0;
  Window window1, window2;
  double p = kInf;
  WeightSpec weight;
  bool pass = false;
};

/// Both tiers must stay finite over the run; the growth fits are reported
/// only.
inline Corollary1Report verify_corollary1(const Trajectory& traj, const WeightSpec& spec,
                                          double p,
                                          std::optional<Window> window = std::nullopt) {
  const WeightSpec v = corollary1_companion(spec);
  if (!v_decay_in_Lp(v, p)) {
    throw PreconditionError("v e^{-|x|} is not in L_p for the requested order");
  }
  Corollary1Report r;
  r.p = p;
  r.weight = spec;
  const SpecWeight w1{spec};
  const PoweredWeight w2{spec, 0.5};
  r.window1 = window.value_or(analysis_window(traj.grid(), w1));
  r.window2 = window.value_or(analysis_window(traj.grid(), w2));
  for (const auto& s : traj.snapshots) {
    const Derivatives z = derivatives(s);
    r.times.push_back(s.t);
    r.tier1.push_back(quintuple_norm_parts(z, w1, p, r.window1).total);
    r.tier2.push_back(quintuple_norm_parts(z, w2, 2.0, r.window2).total);
  }
  if (!std::isfinite(r.tier1.front())) {
    throw PreconditionError("initial (phi, p) norm is infinite");
  }
  if (!std::isfinite(r.tier2.front())) {
    throw PreconditionError("initial (phi^1/2, 2) norm is infinite");
  }
  r.sup1 = *std::max_element(r.tier1.begin(), r.tier1.end());
  r.sup2 = *std::max_element(r.tier2.begin(), r.tier2.end());
  r.pass = std::isfinite(r.sup1) && std::isfinite(r.sup2);
  r.fit1 = fit_growth(r.times, r.tier1);
  r.fit2 = fit_growth(r.times, r.tier2);
  return r;
}

struct DecayKind {
  enum class Type { algebraic, one_sided_exponential } type = Type::algebraic;
  double rate = 0.0;  // c for algebraic, a for one-sided exponential

  static DecayKind algebraic(double c) { return {Type::algebraic, c}; }
  static DecayKind one_sided_exponential(double a) {
    return {Type::one_sided_exponential, a};
  }
};

struct DecayReport {
  std::vector<double> times;
  std::vector<double> rates;  // fitted decay rate per snapshot
  double initial_rate = 0.0;
  bool vacuous = false;
  bool pass = false;
};

inline constexpr double kEnvelopeFloor = 1e-12;

/// Decay rate of the far-field envelope |u|+|u_x|+|u_xx|+|rho|+|rho_x|:
/// the negated log-log slope (algebraic) or log-linear slope on x > 0
/// (one-sided exponential). Fit window x in [10, L-10], samples above the
/// envelope floor only; the algebraic rate is the smaller of both sides.
inline double envelope_decay_rate(const State& s, DecayKind::Type type) {
  const Derivatives z = derivatives(s);
  const Grid& g = s.grid();
  auto envelope = [&](std::size_t j) {
    return std::abs(z.u[j]) + std::abs(z.ux[j]) + std::abs(z.uxx[j]) +
           std::abs(z.rho[j]) + std::abs(z.rhox[j]);
  };
  auto side_rate = [&](bool right) {
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < g.N(); ++j) {
      const double x = right ? g.x()[j] : -g.x()[j];
      if (x < 10.0 || x > g.L() - 10.0) continue;
      const double e = envelope(j);
      if (!(e > kEnvelopeFloor)) continue;
      xs.push_back(type == DecayKind::Type::algebraic ? std::log(x) : x);
      ys.push_back(std::log(e));
    }
    if (xs.size() < 2) {
      throw WindowError("far-field envelope below the noise floor across the fit window");
    }
    return -fit_line(xs, ys).slope;
  };
  if (type == DecayKind::Type::one_sided_exponential) return side_rate(true);
  return std::min(side_rate(true), side_rate(false));
}

inline DecayReport decay_preservation_check(const Trajectory& traj, DecayKind kind) {
  DecayReport r;
  const State& s0 = traj.initial();
  if (s0.u.max_abs() == 0.0 && s0.rho.max_abs() == 0.0) {
    r.vacuous = true;
    r.pass = true;
    return r;
  }
  r.initial_rate = envelope_decay_rate(s0, kind.type);
  if (r.initial_rate < kind.rate - 0.05) {
    throw PreconditionError("initial datum does not have the stated decay");
  }
  r.pass = true;
  for (const auto& s : traj.snapshots) {
    const double rate = s.t == 0.0 ? r.initial_rate : envelope_decay_rate(s, kind.type);
    r.times.push_back(s.t);
    r.rates.push_back(rate);
    if (rate < r.initial_rate - 0.05) r.pass = false;
  }
  return r;
}

}  // namespace ch2
