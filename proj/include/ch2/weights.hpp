#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ch2/errors.hpp"
#include "ch2/grid.hpp"
#include "ch2/spectral.hpp"

namespace ch2 {

enum class Side { both, right_only };
enum class Smoothing { exact, regularized };

/// phi(x) = e^{a|x|^b} (1+|x|)^c (log(e+|x|))^d.
///
/// `right_only` keeps the formula on x >= 0 and sets phi = 1 on x < 0.
/// `regularized` swaps |x|^b in the exponential factor for
/// (1+x^2)^{b/2} - 1, which keeps |phi'/phi| bounded near the origin.
struct WeightSpec {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  Side side = Side::both;
  Smoothing smoothing = Smoothing::exact;

  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

inline WeightSpec polynomial_weight(double c) { return {0.0, 0.0, c, 0.0}; }
inline WeightSpec exponential_weight(double a) { return {a, 1.0, 0.0, 0.0}; }

/// e^{|x|/2} (1+|x|)^{1/2} (log(e+|x|))^d, the far-field weight of the
/// asymptotic-profile result.
inline WeightSpec psi_weight(double d) { return {0.5, 1.0, 0.5, d}; }

inline bool finite_params(const WeightSpec& s) noexcept {
  return std::isfinite(s.a) && std::isfinite(s.b) && std::isfinite(s.c) &&
         std::isfinite(s.d);
}

inline bool is_admissible(const WeightSpec& s) noexcept {
  return finite_params(s) && s.a >= 0.0 && s.b >= 0.0 && s.b <= 1.0 &&
         s.a * s.b < 1.0;
}

inline const double kMaxLogDouble = std::log(std::numeric_limits<double>::max());

namespace detail {

// Surrogate for |x|^b in the exponential factor, as a function of r = |x|.
inline double radial_power(const WeightSpec& s, double r) {
  if (s.smoothing == Smoothing::regularized) {
    return std::expm1(0.5 * s.b * std::log1p(r * r));
  }
  return std::pow(r, s.b);
}

// d/dr of radial_power; +inf at r = 0 for exact 0 < b < 1.
inline double radial_power_slope(const WeightSpec& s, double r) {
  if (s.b == 0.0) return 0.0;
  if (s.smoothing == Smoothing::regularized) {
    return s.b * r * std::pow(1.0 + r * r, 0.5 * s.b - 1.0);
  }
  if (s.b == 1.0) return 1.0;
  if (r == 0.0) return std::numeric_limits<double>::infinity();
  return s.b * std::pow(r, s.b - 1.0);
}

}  // namespace detail

/// log phi(x); never overflows for finite parameters.
inline double log_weight(const WeightSpec& s, double x) {
  if (s.side == Side::right_only && x < 0.0) return 0.0;
  const double r = std::abs(x);
  double v = 0.0;
  if (s.a != 0.0) v += s.a * detail::radial_power(s, r);
  if (s.c != 0.0) v += s.c * std::log1p(r);
  if (s.d != 0.0) v += s.d * std::log(std::log(std::numbers::e + r));
  return v;
}

/// d/dx log phi(x) away from the kink of a right-only weight.
inline double log_weight_slope(const WeightSpec& s, double x) {
  if (s.side == Side::right_only && x < 0.0) return 0.0;
  const double r = std::abs(x);
  const double e_r = std::numbers::e + r;
  double g = 0.0;
  if (s.a != 0.0) g += s.a * detail::radial_power_slope(s, r);
  if (s.c != 0.0) g += s.c / (1.0 + r);
  if (s.d != 0.0) g += s.d / (e_r * std::log(e_r));
  return x < 0.0 ? -g : g;
}

inline double eval_weight(const WeightSpec& s, double x) {
  if (!finite_params(s) || !std::isfinite(x)) {
    throw DomainError("weight parameters and argument must be finite");
  }
  const double lw = log_weight(s, x);
  if (lw > kMaxLogDouble) {
    std::ostringstream os;
    os << "weight overflows double range at x = " << x;
    throw RangeError(os.str());
  }
  return std::exp(lw);
}

/// Callable wrapper so a spec can be passed wherever a weight function is
/// expected.
struct SpecWeight {
  WeightSpec spec;
  double operator()(double x) const { return eval_weight(spec, x); }
};

/// phi^power, used for the half-power tier of the two-tier bound.
struct PoweredWeight {
  WeightSpec spec;
  double power = 1.0;
  double operator()(double x) const {
    const double lw = power * log_weight(spec, x);
    if (lw > kMaxLogDouble) throw RangeError("powered weight overflows");
    return std::exp(lw);
  }
};

struct UnitWeight {
  double operator()(double) const noexcept { return 1.0; }
};

/// min(phi, n). Bounded by n; inherits moderateness and the derivative bound.
struct TruncatedWeight {
  WeightSpec spec;
  double cap = 1.0;
  double operator()(double x) const {
    const double lw = log_weight(spec, x);
    if (lw >= std::log(cap)) return cap;
    return std::min(std::exp(lw), cap);
  }
};

inline TruncatedWeight truncate(const WeightSpec& spec, double n) {
  if (!(n > 0.0)) throw DomainError("truncation level must be positive");
  return {spec, n};
}

/// v(x) = e^{a|x|^b}(1+|x|)^{|c|}(log(e+|x|))^{|d|}, always two-sided.
inline WeightSpec companion_v(const WeightSpec& spec) {
  if (!is_admissible(spec)) {
    throw AdmissibilityError(
        "weight is not admissible: need a >= 0, 0 <= b <= 1 and ab < 1");
  }
  return {spec.a, spec.b, std::abs(spec.c), std::abs(spec.d), Side::both,
          spec.smoothing};
}

struct ModerateCertificate {
  double c_mod = 1.0;       // sampled sup of phi(x+y) / (v(x) phi(y))
  double A = 0.0;           // |phi'| <= A phi a.e.
  double v_integral = 0.0;  // int v(x) e^{-|x|} dx
  double dGv_l1 = 0.0;      // ||(d/dx G) v||_1
  double Gv_l1 = 0.0;       // ||G v||_1
  double sample_box = 0.0;
};

/// Sup of |phi'/phi| from the analytic log-derivative, sampled on [0, box]
/// plus a log-spaced sweep out to 1e6 (the family's slope settles long
/// before that). The kink of a right-only weight is excluded.
inline double derivative_bound(const WeightSpec& spec, double box,
                               std::size_t samples) {
  double A = 0.0;
  auto visit = [&](double x) {
    A = std::max(A, std::abs(log_weight_slope(spec, x)));
    if (spec.side == Side::both) return;
    A = std::max(A, std::abs(log_weight_slope(spec, -x)));
  };
  const std::size_t n = std::max<std::size_t>(samples, 2) * 8;
  for (std::size_t i = 0; i <= n; ++i) {
    visit(box * static_cast<double>(i) / static_cast<double>(n));
  }
  for (double x = box; x < 1e6; x *= 1.05) visit(x);
  return A;
}

/// int_R v(x) e^{-|x|} dx for a two-sided v, by adaptive Gauss-Kronrod on
/// [0, X] with X chosen so the exponentially decaying tail is below 1e-14.
inline double exp_decay_integral(const WeightSpec& v) {
  auto log_integrand = [&](double x) { return log_weight(v, x) - x; };
  double cut = -1.0;
  for (double X = 16.0; X <= 1048576.0; X *= 2.0) {
    const double rate = 1.0 - log_weight_slope(v, X);
    if (rate <= 0.0) continue;
    const double li = log_integrand(X);
    if (li < 0.0 && std::exp(li) / rate < 1e-14) {
      cut = X;
      break;
    }
  }
  if (cut < 0.0) {
    throw AdmissibilityError(
        "integrability condition fails: int v(x) e^{-|x|} dx diverges");
  }
  auto f = [&](double x) { return std::exp(log_integrand(x)); };
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  // Unit-ish panels keep the adaptive rule honest on long intervals.
  const double panel = 8.0;
  for (double lo = 0.0; lo < cut; lo += panel) {
    total += gauss_kronrod<double, 31>::integrate(f, lo, std::min(cut, lo + panel),
                                                  15, 1e-14);
  }
  return 2.0 * total;
}

/// Certify moderateness of phi against an explicit companion v on the
/// lattice of `samples` x `samples` points over [-box, box]^2.
inline ModerateCertificate certify_against(const WeightSpec& spec,
                                           const WeightSpec& v, double box,
                                           std::size_t samples) {
  if (!(box > 0.0)) throw DomainError("sample box must be positive");
  if (samples < 2) throw DomainError("need at least two lattice samples");
  ModerateCertificate cert;
  cert.sample_box = box;

  const double h = 2.0 * box / static_cast<double>(samples - 1);
  std::vector<double> log_phi(samples), log_v(samples);
  std::vector<double> log_phi_sum(2 * samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = -box + static_cast<double>(i) * h;
    log_phi[i] = log_weight(spec, x);
    log_v[i] = log_weight(v, x);
  }
  for (std::size_t i = 0; i < log_phi_sum.size(); ++i) {
    log_phi_sum[i] = log_weight(spec, -2.0 * box + static_cast<double>(i) * h);
  }
  // x = 0 contributes phi(y)/(v(0) phi(y)) = 1 whether or not it is a node.
  double best = -log_weight(v, 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t j = 0; j < samples; ++j) {
      best = std::max(best, log_phi_sum[i + j] - log_v[i] - log_phi[j]);
    }
  }
  cert.c_mod = std::exp(best);

  cert.A = derivative_bound(spec, box, samples);
  if (!std::isfinite(cert.A)) {
    throw AdmissibilityError(
        "derivative bound |phi'| <= A phi fails near x = 0 for exact "
        "0 < b < 1; use smoothing=regularized");
  }
  cert.v_integral = exp_decay_integral(v);
  cert.dGv_l1 = 0.5 * cert.v_integral;
  cert.Gv_l1 = 0.5 * cert.v_integral;
  return cert;
}

inline ModerateCertificate certify(const WeightSpec& spec, double box = 40.0,
                                   std::size_t samples = 801) {
  return certify_against(spec, companion_v(spec), box, samples);
}

struct YoungCheck {
  double lhs = 0.0;    // ||(f1 * f2) phi||_p
  double rhs = 0.0;    // ||f1 v||_1 ||f2 phi||_p
  double c_mod = 1.0;
  bool holds = false;
};

/// Open-line discrete convolution on the grid: samples of f1 falling
/// outside [-L, L) count as zero.
inline std::vector<double> line_convolution(const Field& f1, const Field& f2) {
  require_same_grid(f1, f2);
  const auto n = static_cast<std::ptrdiff_t>(f1.size());
  const double dx = f1.grid().dx();
  std::vector<double> out(f1.size(), 0.0);
  // x_i - x_j = x_{i - j + n/2}
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    const std::ptrdiff_t jlo = std::max<std::ptrdiff_t>(0, i + n / 2 - n + 1);
    const std::ptrdiff_t jhi = std::min<std::ptrdiff_t>(n - 1, i + n / 2);
    for (std::ptrdiff_t j = jlo; j <= jhi; ++j) s += f1[i - j + n / 2] * f2[j];
    out[i] = s * dx;
  }
  return out;
}

inline YoungCheck weighted_young_check(const Field& f1, const Field& f2,
                                       const WeightSpec& spec, double p,
                                       const ModerateCertificate& cert,
                                       double tol = 1e-12) {
  require_same_grid(f1, f2);
  const Grid& g = f1.grid();
  const WeightSpec v = companion_v(spec);
  const Field conv(f1.grid_ptr(), line_convolution(f1, f2));
  const Window full{-g.L(), g.L()};
  YoungCheck r;
  r.c_mod = cert.c_mod;
  r.lhs = weighted_lp_norm(conv, SpecWeight{spec}, p, full);
  r.rhs = weighted_lp_norm(f1, SpecWeight{v}, 1.0, full) *
          weighted_lp_norm(f2, SpecWeight{spec}, p, full);
  r.holds = r.lhs <= cert.c_mod * r.rhs * (1.0 + tol);
  return r;
}

inline YoungCheck weighted_young_check(const Field& f1, const Field& f2,
                                       const WeightSpec& spec, double p) {
  return weighted_young_check(f1, f2, spec, p, certify(spec));
}

// ---------------------------------------------------------------------------
// key=value text form

inline std::string to_string(Side s) {
  return s == Side::both ? "both" : "right";
}
inline std::string to_string(Smoothing s) {
  return s == Smoothing::exact ? "exact" : "regularized";
}

inline void write_weight_spec(std::ostream& os, const WeightSpec& s) {
  os << std::setprecision(17) << "a=" << s.a << "\nb=" << s.b << "\nc=" << s.c
     << "\nd=" << s.d << "\nside=" << to_string(s.side)
     << "\nsmoothing=" << to_string(s.smoothing) << '\n';
}

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& text, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + text + "'", line);
  }
  if (used != text.size()) throw ParseError("not a number: '" + text + "'", line);
  return v;
}

/// Apply one weight key; returns false when the key is not a weight key.
inline bool apply_weight_key(WeightSpec& s, const std::string& key,
                             const std::string& value, int line) {
  if (key == "a") {
    s.a = parse_real(value, line);
  } else if (key == "b") {
    s.b = parse_real(value, line);
  } else if (key == "c") {
    s.c = parse_real(value, line);
  } else if (key == "d") {
    s.d = parse_real(value, line);
  } else if (key == "side") {
    if (value == "both") {
      s.side = Side::both;
    } else if (value == "right") {
      s.side = Side::right_only;
    } else {
      throw ParseError("side must be both|right", line);
    }
  } else if (key == "smoothing") {
    if (value == "exact") {
      s.smoothing = Smoothing::exact;
    } else if (value == "regularized") {
      s.smoothing = Smoothing::regularized;
    } else {
      throw ParseError("smoothing must be exact|regularized", line);
    }
  } else {
    return false;
  }
  return true;
}

inline WeightSpec read_weight_spec(std::istream& is) {
  WeightSpec s;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!apply_weight_key(s, key, value, line)) {
      throw ParseError("unknown weight key '" + key + "'", line);
    }
  }
  if (!finite_params(s)) throw ParseError("weight parameters must be finite", 0);
  return s;
}

}  // namespace ch2
