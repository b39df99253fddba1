#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ch2/asymptotics.hpp"
#include "ch2/dynamics.hpp"
#include "ch2/errors.hpp"
#include "ch2/fft.hpp"
#include "ch2/io.hpp"
#include "ch2/persistence.hpp"
#include "ch2/weights.hpp"

namespace ch2 {

enum class Check { theorem1, diffineq, corollary1, corollary2, decay, propagation, young };

inline const std::vector<std::pair<Check, std::string>>& check_names() {
  static const std::vector<std::pair<Check, std::string>> names = {
      {Check::theorem1, "theorem1"},     {Check::diffineq, "diffineq"},
      {Check::corollary1, "corollary1"}, {Check::corollary2, "corollary2"},
      {Check::decay, "decay"},           {Check::propagation, "propagation"},
      {Check::young, "young"}};
  return names;
}

inline std::string to_string(Check c) {
  for (const auto& [k, n] : check_names()) {
    if (k == c) return n;
  }
  return "?";
}

inline Check parse_check(const std::string& s, int line = 0) {
  for (const auto& [k, n] : check_names()) {
    if (n == s) return k;
  }
  throw ParseError("unknown check '" + s + "'", line);
}

/// Process exit codes.
enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitPrecondition = 2,
  kExitBlowUp = 3,
  kExitInternal = 4,
};

struct RunConfig {
  std::string preset = "sech";  // sech | gaussian | bump | zero | custom-file
  std::string custom_file;
  double amplitude_u = 0.5;
  double amplitude_rho = 0.3;
  double L = 60.0;
  std::size_t N = 4096;
  double T_end = 2.0;
  double output_stride = 0.01;
  std::optional<double> fixed_dt;
  bool filter = false;
  double tail_tolerance = 1e-12;
  double blowup_ux = 1e4;
  double breakdown_tail = 1e-4;
  WeightSpec weight;
  double p = 2.0;
  std::set<Check> checks;
  DecayKind decay = DecayKind::one_sided_exponential(0.9);
  double psi_d = 1.0;
  std::vector<double> profile_times{0.25, 0.5, 1.0};
  std::uint64_t seed = 20240601;
  std::size_t young_draws = 200;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto& s : split(v, ',')) {
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("expected true|false", line);
}

inline double parse_order(const std::string& v, int line) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  const double p = parse_real(v, line);
  if (!(p >= 1.0)) throw ParseError("p must be >= 1 or inf", line);
  return p;
}

inline std::size_t parse_count(const std::string& v, int line) {
  const double x = parse_real(v, line);
  if (!(x >= 0.0) || x != std::floor(x) || x > 1e15) {
    throw ParseError("expected a non-negative integer", line);
  }
  return static_cast<std::size_t>(x);
}

}  // namespace detail

inline void apply_config_key(RunConfig& c, const std::string& key, const std::string& value,
                             int line) {
  using namespace detail;
  if (apply_weight_key(c.weight, key, value, line)) return;
  if (key == "preset") {
    static const std::set<std::string> ok = {"sech", "gaussian", "bump", "zero", "custom-file"};
    if (!ok.count(value)) throw ParseError("unknown preset '" + value + "'", line);
    c.preset = value;
  } else if (key == "custom_file") {
    c.custom_file = value;
  } else if (key == "amplitude_u") {
    c.amplitude_u = parse_real(value, line);
  } else if (key == "amplitude_rho") {
    c.amplitude_rho = parse_real(value, line);
  } else if (key == "L") {
    c.L = parse_real(value, line);
  } else if (key == "N") {
    c.N = parse_count(value, line);
  } else if (key == "T_end") {
    c.T_end = parse_real(value, line);
  } else if (key == "output_stride") {
    c.output_stride = parse_real(value, line);
  } else if (key == "fixed_dt") {
    c.fixed_dt = parse_real(value, line);
  } else if (key == "filter") {
    c.filter = parse_bool(value, line);
  } else if (key == "tail_tolerance") {
    c.tail_tolerance = parse_real(value, line);
  } else if (key == "blowup_ux") {
    c.blowup_ux = parse_real(value, line);
  } else if (key == "breakdown_tail") {
    c.breakdown_tail = parse_real(value, line);
  } else if (key == "p") {
    c.p = parse_order(value, line);
  } else if (key == "checks") {
    c.checks.clear();
    for (const auto& s : split_list(value)) c.checks.insert(parse_check(s, line));
  } else if (key == "decay") {
    const auto colon = value.find(':');
    if (colon == std::string::npos) throw ParseError("decay must be kind:rate", line);
    const std::string kind = value.substr(0, colon);
    const double rate = parse_real(value.substr(colon + 1), line);
    if (kind == "algebraic") {
      c.decay = DecayKind::algebraic(rate);
    } else if (kind == "one_sided") {
      c.decay = DecayKind::one_sided_exponential(rate);
    } else {
      throw ParseError("decay kind must be algebraic|one_sided", line);
    }
  } else if (key == "psi_d") {
    c.psi_d = parse_real(value, line);
  } else if (key == "profile_times") {
    c.profile_times.clear();
    for (const auto& s : split_list(value)) c.profile_times.push_back(parse_real(s, line));
  } else if (key == "seed") {
    c.seed = parse_count(value, line);
  } else if (key == "young_draws") {
    c.young_draws = parse_count(value, line);
  } else {
    throw ParseError("unknown key '" + key + "'", line);
  }
}

/// Structural invariants that do not need the grid: N a power of two, T_end
/// >= 0, and T_end an integer number of strides.
inline void validate(const RunConfig& c) {
  if (c.N < 16 || (c.N & (c.N - 1)) != 0) throw ParseError("N must be a power of two >= 16", 0);
  if (!(c.L > 0.0) || !std::isfinite(c.L)) throw ParseError("L must be positive", 0);
  if (!(c.T_end >= 0.0) || !std::isfinite(c.T_end)) throw ParseError("T_end must be >= 0", 0);
  if (!(c.output_stride > 0.0)) throw ParseError("output_stride must be positive", 0);
  const double q = c.T_end / c.output_stride;
  if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q)) {
    throw ParseError("output_stride must divide T_end", 0);
  }
  if (c.fixed_dt && !(*c.fixed_dt > 0.0)) throw ParseError("fixed_dt must be positive", 0);
  if (c.preset == "custom-file" && c.custom_file.empty()) {
    throw ParseError("custom-file preset needs custom_file", 0);
  }
  if (!finite_params(c.weight)) throw ParseError("weight parameters must be finite", 0);
}

inline RunConfig read_config(std::istream& is) {
  RunConfig c;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line);
    apply_config_key(c, trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line);
  }
  validate(c);
  return c;
}

inline RunConfig read_config_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot read config " + p.string());
  RunConfig c = read_config(is);
  if (!c.custom_file.empty() && std::filesystem::path(c.custom_file).is_relative()) {
    c.custom_file = (p.parent_path() / c.custom_file).string();
  }
  return c;
}

inline void write_config(std::ostream& os, const RunConfig& c) {
  os << "preset=" << c.preset << '\n';
  if (!c.custom_file.empty()) os << "custom_file=" << c.custom_file << '\n';
  os << "amplitude_u=" << fmt(c.amplitude_u) << "\namplitude_rho=" << fmt(c.amplitude_rho)
     << "\nL=" << fmt(c.L) << "\nN=" << c.N << "\nT_end=" << fmt(c.T_end)
     << "\noutput_stride=" << fmt(c.output_stride) << '\n';
  if (c.fixed_dt) os << "fixed_dt=" << fmt(*c.fixed_dt) << '\n';
  os << "filter=" << (c.filter ? "true" : "false") << "\ntail_tolerance=" << fmt(c.tail_tolerance)
     << "\nblowup_ux=" << fmt(c.blowup_ux) << "\nbreakdown_tail=" << fmt(c.breakdown_tail)
     << '\n';
  write_weight_spec(os, c.weight);
  os << "p=" << fmt_order(c.p) << "\nchecks=";
  bool first = true;
  for (Check k : c.checks) {
    os << (first ? "" : ",") << to_string(k);
    first = false;
  }
  os << "\ndecay="
     << (c.decay.type == DecayKind::Type::algebraic ? "algebraic:" : "one_sided:")
     << fmt(c.decay.rate) << "\npsi_d=" << fmt(c.psi_d) << "\nprofile_times=";
  for (std::size_t i = 0; i < c.profile_times.size(); ++i) {
    os << (i ? "," : "") << fmt(c.profile_times[i]);
  }
  os << "\nseed=" << c.seed << "\nyoung_draws=" << c.young_draws << '\n';
}

// ---------------------------------------------------------------------------
// initial data

/// Fourier interpolation of periodic samples onto n points (zero padding or
/// truncation of the spectrum; an unmatched Nyquist mode is dropped).
inline std::vector<double> fourier_resample(const std::vector<double>& values, std::size_t n) {
  const std::size_t m = values.size();
  if (m == n) return values;
  const Spectrum src = to_spectrum(values);
  Spectrum dst(n / 2 + 1, {0.0, 0.0});
  const std::size_t keep_src = (m % 2 == 0) ? m / 2 : m / 2 + 1;  // modes below Nyquist
  const std::size_t keep = std::min(keep_src, n / 2);
  for (std::size_t k = 0; k < keep; ++k) dst[k] = src[k];
  return from_spectrum(dst, n);
}

/// Two- or three-column CSV (x,u[,rho]) on a uniform grid covering [-L, L).
inline State read_custom_datum(const std::filesystem::path& p, const GridPtr& grid) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot read custom datum " + p.string());
  std::vector<double> xs, us, rs;
  std::string line;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto cols = detail::split(body, ',');
    if (cols.size() != 2 && cols.size() != 3) throw ParseError("expected 2 or 3 columns", no);
    if (xs.empty() && us.empty()) {
      try {
        parse_real(cols[0], no);
      } catch (const ParseError&) {
        continue;  // header row
      }
    }
    xs.push_back(parse_real(cols[0], no));
    us.push_back(parse_real(cols[1], no));
    rs.push_back(cols.size() == 3 ? parse_real(cols[2], no) : 0.0);
  }
  if (xs.size() < 4) throw ParseError("custom datum needs at least 4 rows", no);
  const double L = grid->L();
  const double h = 2.0 * L / static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double want = -L + static_cast<double>(i) * h;
    if (std::abs(xs[i] - want) > 1e-9 * std::max(1.0, L)) {
      throw DomainError("custom datum must sample [-L, L) uniformly (row " +
                        std::to_string(i + 1) + ")");
    }
  }
  return make_state(Field(grid, fourier_resample(us, grid->N())),
                    Field(grid, fourier_resample(rs, grid->N())), 0.0);
}

inline State initial_state(const RunConfig& c) {
  const auto grid = make_grid(c.L, c.N);
  if (c.preset == "custom-file") return read_custom_datum(c.custom_file, grid);
  Preset p = Preset::zero;
  if (c.preset == "sech") {
    p = Preset::sech;
  } else if (c.preset == "gaussian") {
    p = Preset::gaussian;
  } else if (c.preset == "bump") {
    p = Preset::bump;
  } else if (c.preset != "zero") {
    throw PreconditionError("unknown preset '" + c.preset + "'");
  }
  return make_preset(p, grid, c.amplitude_u, c.amplitude_rho);
}

// ---------------------------------------------------------------------------
// randomized Young check

/// Sum of three Gaussians with seeded amplitudes, centres and widths.
inline Field random_bump_sum(std::mt19937_64& rng, const GridPtr& grid) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0), ctr(-5.0, 5.0), wid(0.3, 2.0);
  double a[3], m[3], s[3];
  for (int i = 0; i < 3; ++i) {
    a[i] = amp(rng);
    m[i] = ctr(rng);
    s[i] = wid(rng);
  }
  return Field::sample(grid, [&](double x) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += a[i] * std::exp(-0.5 * (x - m[i]) * (x - m[i]) / (s[i] * s[i]));
    return v;
  });
}

struct YoungSweep {
  std::vector<YoungCheck> draws;
  ModerateCertificate cert;
  bool pass = false;
};

inline YoungSweep young_sweep(const WeightSpec& spec, double p, std::uint64_t seed,
                              std::size_t draws) {
  YoungSweep r;
  r.cert = certify(spec);
  const auto grid = make_grid(20.0, 512);
  std::mt19937_64 rng(seed);
  r.pass = true;
  for (std::size_t i = 0; i < draws; ++i) {
    const Field f1 = random_bump_sum(rng, grid);
    const Field f2 = random_bump_sum(rng, grid);
    r.draws.push_back(weighted_young_check(f1, f2, spec, p, r.cert));
    r.pass = r.pass && r.draws.back().holds;
  }
  return r;
}

// ---------------------------------------------------------------------------
// run

struct CheckOutcome {
  Check check;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  int exit_code = kExitInternal;
  std::vector<CheckOutcome> outcomes;
  std::string message;
};

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  auto os = open_out(p);
  os << text;
  if (!os) throw IoError("write failed: " + p.string());
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

inline void require_admissible(const WeightSpec& w, Check c) {
  if (!is_admissible(w)) {
    throw AdmissibilityError(to_string(c) + " needs an admissible weight (a >= 0, 0 <= b <= 1, "
                             "ab < 1); got " + weight_label(w));
  }
}

inline CheckOutcome run_check(Check c, const RunConfig& cfg, const Trajectory& traj,
                              const std::filesystem::path& out) {
  CheckOutcome o{c, false, {}};
  std::ostringstream d;
  switch (c) {
    case Check::theorem1: {
      const auto r = verify_theorem1(traj, cfg.weight, cfg.p);
      write_file(out / "theorem1.csv", render([&](std::ostream& os) { write_persistence_csv(os, r); }));
      double worst = kInf;
      for (std::size_t i = 0; i < r.margin.size(); ++i) {
        if (r.bound[i] > 0.0) worst = std::min(worst, r.margin[i] / r.bound[i]);
      }
      d << "C=" << fmt(r.C_used) << " M=" << fmt(r.M) << " min_relative_margin=" << fmt(worst);
      o.pass = r.pass;
      break;
    }
    case Check::diffineq: {
      const auto r = verify_differential_inequalities(traj, cfg.weight, cfg.p);
      if (r.refused) throw PreconditionError("diffineq refused: " + r.reason);
      write_file(out / "diffineq.csv", render([&](std::ostream& os) { write_diffineq_csv(os, r); }));
      for (const auto& comp : r.components) d << comp.name << '=' << fmt(comp.worst_violation) << ' ';
      o.pass = r.pass;
      break;
    }
    case Check::corollary1: {
      const auto r = verify_corollary1(traj, cfg.weight, cfg.p);
      write_file(out / "corollary1.csv",
                 render([&](std::ostream& os) { write_corollary1_csv(os, r); }));
      d << "sup1=" << fmt(r.sup1) << " sup2=" << fmt(r.sup2);
      o.pass = r.pass;
      break;
    }
    case Check::corollary2: {
      Corollary2Options opt;
      opt.times = cfg.profile_times;
      opt.psi_d = cfg.psi_d;
      const auto r = verify_corollary2(traj, opt);
      write_file(out / "profile.csv",
                 render([&](std::ostream& os) { write_profile_csv(os, r.profiles); }));
      write_file(out / "profile_series.csv", render([&](std::ostream& os) {
                   write_profile_csv(os, profile_series(traj, opt.extraction));
                 }));
      write_file(out / "condition.csv",
                 render([&](std::ostream& os) { write_condition_csv(os, r); }));
      d << "condition_bounded=" << (r.condition_bounded ? 1 : 0);
      o.pass = r.pass;
      break;
    }
    case Check::decay: {
      const auto r = decay_preservation_check(traj, cfg.decay);
      write_file(out / "decay.csv",
                 render([&](std::ostream& os) { write_decay_csv(os, r, cfg.decay); }));
      double lo = kInf;
      for (double v : r.rates) lo = std::min(lo, v);
      d << "initial_rate=" << fmt(r.initial_rate) << " min_rate=" << fmt(lo);
      o.pass = r.pass;
      break;
    }
    case Check::propagation: {
      const auto r = infinite_propagation_check(traj);
      write_file(out / "propagation.csv",
                 render([&](std::ostream& os) { write_propagation_csv(os, r); }));
      d << "max_outside=" << fmt(r.max_outside) << " rate=" << fmt(r.fitted_rate);
      o.pass = r.pass;
      break;
    }
    case Check::young: {
      const auto r = young_sweep(cfg.weight, cfg.p, cfg.seed, cfg.young_draws);
      write_file(out / "young.csv", render([&](std::ostream& os) {
                   os << "# c_mod=" << fmt(r.cert.c_mod) << "\ndraw,lhs,rhs,holds\n";
                   for (std::size_t i = 0; i < r.draws.size(); ++i) {
                     os << i << ',' << fmt(r.draws[i].lhs) << ',' << fmt(r.draws[i].rhs) << ','
                        << (r.draws[i].holds ? 1 : 0) << '\n';
                   }
                 }));
      d << "draws=" << r.draws.size();
      o.pass = r.pass;
      break;
    }
  }
  o.detail = d.str();
  return o;
}

inline void write_summary(const std::filesystem::path& out, const RunResult& r) {
  std::ostringstream os;
  for (const auto& o : r.outcomes) {
    os << "check=" << to_string(o.check) << " verdict=" << (o.pass ? "pass" : "fail") << ' '
       << o.detail << '\n';
  }
  if (!r.message.empty()) os << "message=" << r.message << '\n';
  os << "exit=" << r.exit_code << '\n';
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  write_file(out / "summary.txt", os.str());
}

}  // namespace detail

/// Simulate, run every requested check and write artifacts under out_dir.
/// Every failure is mapped onto one exit code; nothing escapes.
inline RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  RunResult res;
  auto finish = [&](int code, std::string msg) {
    res.exit_code = code;
    res.message = std::move(msg);
    try {
      detail::write_summary(out_dir, res);
    } catch (const std::exception&) {
      if (res.exit_code == kExitPass || res.exit_code == kExitCheckFailed) {
        res.exit_code = kExitPrecondition;
      }
    }
    return res;
  };
  try {
    validate(cfg);
    for (Check c : cfg.checks) {
      if (c == Check::theorem1 || c == Check::diffineq || c == Check::young) {
        detail::require_admissible(cfg.weight, c);
      }
      if (c == Check::corollary1) corollary1_companion(cfg.weight);
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    detail::write_file(out_dir / "config.txt",
                       detail::render([&](std::ostream& os) { write_config(os, cfg); }));

    EvolveControls ctl;
    ctl.output_stride = cfg.output_stride;
    ctl.fixed_dt = cfg.fixed_dt;
    ctl.filter = cfg.filter;
    ctl.tail_tolerance = cfg.tail_tolerance;
    ctl.blowup_ux = cfg.blowup_ux;
    ctl.breakdown_tail = cfg.breakdown_tail;
    const Trajectory traj = evolve(initial_state(cfg), cfg.T_end, ctl);
    write_trajectory(out_dir / "trajectory", traj, {{"preset", cfg.preset}});
    if (!traj.completed()) {
      return finish(kExitBlowUp, "blow-up at t=" + fmt(*traj.blowup_time) + ": " +
                                     traj.blowup_reason);
    }
    bool all = true;
    for (Check c : cfg.checks) {
      res.outcomes.push_back(detail::run_check(c, cfg, traj, out_dir));
      all = all && res.outcomes.back().pass;
    }
    return finish(all ? kExitPass : kExitCheckFailed, {});
  } catch (const BlowUpError& e) {
    return finish(kExitBlowUp, e.what());
  } catch (const ParseError& e) {
    return finish(kExitPrecondition, std::string("config: ") + e.what());
  } catch (const Error& e) {
    return finish(kExitPrecondition, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return finish(kExitPrecondition, e.what());
  } catch (const std::exception& e) {
    return finish(kExitInternal, std::string("internal: ") + e.what());
  }
}

/// Prints the certificate and traced constants; 0 when admissible, 2 otherwise.
inline int weights_check(std::istream& spec_text, std::ostream& out, std::ostream& err) {
  WeightSpec s;
  try {
    s = read_weight_spec(spec_text);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitPrecondition;
  }
  try {
    const ModerateCertificate cert = certify(s);
    const GronwallConstants g = gronwall_constants(cert);
    out << "weight: " << weight_label(s) << "\nadmissible=1\nc_mod=" << fmt(cert.c_mod)
        << "\nA=" << fmt(cert.A) << "\nv_integral=" << fmt(cert.v_integral)
        << "\ndGv_l1=" << fmt(cert.dGv_l1) << "\nGv_l1=" << fmt(cert.Gv_l1)
        << "\nsample_box=" << fmt(cert.sample_box) << "\nC2=" << fmt(g.C2) << "\nC3=" << fmt(g.C3)
        << "\nC5=" << fmt(g.C5) << "\nC=" << fmt(g.C) << '\n';
    return kExitPass;
  } catch (const AdmissibilityError& e) {
    out << "weight: " << weight_label(s) << "\nadmissible=0\n";
    err << "refused: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  }
}

struct SweepJob {
  RunConfig config;
  std::filesystem::path out_dir;
  std::string label;
};

/// Runs jobs on `workers` threads; each job owns its output directory.
inline std::vector<RunResult> sweep(const std::vector<SweepJob>& jobs, unsigned workers) {
  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      results[i] = run(jobs[i].config, jobs[i].out_dir);
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace ch2
