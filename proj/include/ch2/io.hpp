#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ch2/asymptotics.hpp"
#include "ch2/dynamics.hpp"
#include "ch2/errors.hpp"
#include "ch2/persistence.hpp"
#include "ch2/weights.hpp"

namespace ch2 {

class IoError : public Error {
 public:
  using Error::Error;
};

/// Shortest text that round-trips a double; "inf"/"-inf"/"nan" otherwise.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string fmt_order(double p) { return std::isinf(p) ? "inf" : fmt(p); }

inline std::string weight_label(const WeightSpec& s) {
  return "a=" + fmt(s.a) + " b=" + fmt(s.b) + " c=" + fmt(s.c) + " d=" + fmt(s.d) +
         " side=" + to_string(s.side) + " smoothing=" + to_string(s.smoothing);
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double to_real(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return parse_real(s, 0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// trajectory directory: meta, snap_<index>.csv (x,u,rho), diag.csv

inline std::string snapshot_name(std::size_t i) {
  std::ostringstream os;
  os << "snap_" << std::setw(5) << std::setfill('0') << i << ".csv";
  return os.str();
}

inline void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                             const std::map<std::string, std::string>& extra = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const Grid& g = traj.grid();
  {
    auto os = detail::open_out(dir / "meta");
    os << "L=" << fmt(g.L()) << "\nN=" << g.N() << "\nT_end=" << fmt(traj.T_end)
       << "\noutput_stride=" << fmt(traj.controls.output_stride)
       << "\ncfl=" << fmt(traj.controls.cfl) << "\ncfl_every=" << traj.controls.cfl_every
       << "\nfixed_dt=" << (traj.controls.fixed_dt ? fmt(*traj.controls.fixed_dt) : "none")
       << "\nfilter=" << (traj.controls.filter ? "true" : "false")
       << "\nsnapshots=" << traj.size() << "\nblowup_time="
       << (traj.blowup_time ? fmt(*traj.blowup_time) : "none") << '\n';
    for (const auto& [k, v] : extra) os << k << '=' << v << '\n';
  }
  {
    auto os = detail::open_out(dir / "diag.csv");
    os << "t,M,H1,H2,min_m,tail_max\n";
    for (const auto& d : traj.diagnostics) {
      os << fmt(d.t) << ',' << fmt(d.M_t) << ',' << fmt(d.H1) << ',' << fmt(d.H2) << ','
         << fmt(d.min_mx) << ',' << fmt(d.tail_max) << '\n';
    }
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const State& s = traj.snapshots[i];
    auto os = detail::open_out(dir / snapshot_name(i));
    os << "x,u,rho\n";
    for (std::size_t j = 0; j < g.N(); ++j) {
      os << fmt(g.x()[j]) << ',' << fmt(s.u[j]) << ',' << fmt(s.rho[j]) << '\n';
    }
  }
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot read " + p.string());
  std::map<std::string, std::string> kv;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line);
    kv[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
  }
  return kv;
}

/// Reload a trajectory written by write_trajectory; diagnostics and sources
/// are recomputed from the stored fields.
inline Trajectory read_trajectory(const std::filesystem::path& dir) {
  const auto kv = read_key_values(dir / "meta");
  auto need = [&](const std::string& k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw IoError("meta lacks " + k);
    return it->second;
  };
  const auto grid = make_grid(detail::to_real(need("L")), std::stoul(need("N")));
  Trajectory traj;
  traj.T_end = detail::to_real(need("T_end"));
  traj.controls.output_stride = detail::to_real(need("output_stride"));
  traj.controls.cfl = detail::to_real(need("cfl"));
  traj.controls.cfl_every = std::stoi(need("cfl_every"));
  if (need("fixed_dt") != "none") traj.controls.fixed_dt = detail::to_real(need("fixed_dt"));
  traj.controls.filter = need("filter") == "true";
  if (need("blowup_time") != "none") traj.blowup_time = detail::to_real(need("blowup_time"));

  std::vector<double> times;
  {
    std::ifstream is(dir / "diag.csv");
    if (!is) throw IoError("cannot read diag.csv");
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (!line.empty()) times.push_back(detail::to_real(detail::split(line, ',').at(0)));
    }
  }
  const std::size_t count = std::stoul(need("snapshots"));
  if (times.size() != count) throw IoError("diag.csv row count does not match meta");
  for (std::size_t i = 0; i < count; ++i) {
    std::ifstream is(dir / snapshot_name(i));
    if (!is) throw IoError("missing " + snapshot_name(i));
    std::vector<double> u, r;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto cols = detail::split(line, ',');
      if (cols.size() != 3) throw IoError("bad row in " + snapshot_name(i));
      u.push_back(detail::to_real(cols[1]));
      r.push_back(detail::to_real(cols[2]));
    }
    if (u.size() != grid->N()) throw ShapeError("snapshot length does not match N");
    traj.push(make_state(Field(grid, std::move(u)), Field(grid, std::move(r)), times[i]));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// report CSVs; '#' lines carry run constants ahead of the header row

inline void write_persistence_csv(std::ostream& os, const PersistenceReport& r) {
  os << "# weight: " << weight_label(r.weight) << "\n# p=" << fmt_order(r.p)
     << "\n# C=" << fmt(r.C_used) << "\n# M=" << fmt(r.M) << "\n# window=[" << fmt(r.window.lo)
     << ',' << fmt(r.window.hi) << "]\n# infinite_norm=" << (r.infinite_norm ? 1 : 0)
     << "\n# verdict=" << (r.pass ? "pass" : "fail") << '\n';
  os << "t,N,bound,margin\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << fmt(r.times[i]) << ',' << fmt(r.N_p[i]) << ',' << fmt(r.bound[i]) << ','
       << fmt(r.margin[i]) << '\n';
  }
}

inline void write_diffineq_csv(std::ostream& os, const DiffIneqReport& r) {
  os << "# weight: " << weight_label(r.weight) << "\n# p=" << fmt_order(r.p)
     << "\n# C2=" << fmt(r.constants.C2) << " C3=" << fmt(r.constants.C3)
     << " C5=" << fmt(r.constants.C5) << " A=" << fmt(r.A) << '\n';
  if (r.refused) os << "# refused: " << r.reason << '\n';
  for (const auto& c : r.components) {
    os << "# " << c.name << ": worst=" << fmt(c.worst_violation) << " at t=" << fmt(c.worst_time)
       << (c.holds ? " holds" : " violated") << '\n';
  }
  os << "# verdict=" << (r.pass ? "pass" : "fail") << '\n';
  os << "t";
  for (const char* n : kComponentNames) os << ",lhs_" << n << ",rhs_" << n;
  os << '\n';
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << fmt(r.times[i]);
    for (std::size_t k = 0; k < 5; ++k) os << ',' << fmt(r.lhs[i][k]) << ',' << fmt(r.rhs[i][k]);
    os << '\n';
  }
}

inline void write_corollary1_csv(std::ostream& os, const Corollary1Report& r) {
  os << "# weight: " << weight_label(r.weight) << "\n# p=" << fmt_order(r.p)
     << "\n# sup1=" << fmt(r.sup1) << " sup2=" << fmt(r.sup2) << "\n# fit1: alpha="
     << fmt(r.fit1.alpha) << " tau=" << fmt(r.fit1.tau) << " beta=" << fmt(r.fit1.beta)
     << "\n# fit2: alpha=" << fmt(r.fit2.alpha) << " tau=" << fmt(r.fit2.tau)
     << " beta=" << fmt(r.fit2.beta) << "\n# verdict=" << (r.pass ? "pass" : "fail") << '\n';
  os << "t,N_phi_p,N_sqrtphi_2\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << fmt(r.times[i]) << ',' << fmt(r.tier1[i]) << ',' << fmt(r.tier2[i]) << '\n';
  }
}

inline void write_profile_csv(std::ostream& os, const std::vector<ProfileReport>& rows) {
  if (!rows.empty()) {
    os << "# c1=" << fmt(rows.front().c1) << " c2=" << fmt(rows.front().c2) << " window=["
       << fmt(rows.front().window.lo) << ',' << fmt(rows.front().window.hi) << "]\n";
  }
  os << "t,Phi_plus,Phi_minus,extracted_plus,extracted_minus,residual_plus,residual_minus,"
        "rho_rem_plus,rho_rem_minus\n";
  for (const auto& r : rows) {
    os << fmt(r.t) << ',' << fmt(r.Phi_plus) << ',' << fmt(r.Phi_minus) << ','
       << fmt(r.extracted_plus) << ',' << fmt(r.extracted_minus) << ',' << fmt(r.residual_plus)
       << ',' << fmt(r.residual_minus) << ',' << fmt(r.rho_remainder_plus) << ','
       << fmt(r.rho_remainder_minus) << '\n';
  }
}

inline void write_condition_csv(std::ostream& os, const Corollary2Report& r) {
  os << "# bounded=" << (r.condition_bounded ? 1 : 0) << '\n' << "t,condition\n";
  for (std::size_t i = 0; i < r.condition_times.size(); ++i) {
    os << fmt(r.condition_times[i]) << ',' << fmt(r.condition_values[i]) << '\n';
  }
}

inline void write_decay_csv(std::ostream& os, const DecayReport& r, const DecayKind& kind) {
  os << "# kind="
     << (kind.type == DecayKind::Type::algebraic ? "algebraic" : "one_sided")
     << " stated=" << fmt(kind.rate) << " initial=" << fmt(r.initial_rate)
     << "\n# verdict=" << (r.pass ? "pass" : "fail") << (r.vacuous ? " (vacuous)" : "")
     << "\nt,rate\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << fmt(r.times[i]) << ',' << fmt(r.rates[i]) << '\n';
  }
}

inline void write_propagation_csv(std::ostream& os, const PropagationReport& r) {
  os << "# verdict=" << (r.pass ? "pass" : "fail") << (r.vacuous ? " (vacuous)" : "") << '\n'
     << "t,support_lo,support_hi,max_outside,fitted_rate,fit_points\n"
     << fmt(r.t) << ',' << fmt(r.support_lo) << ',' << fmt(r.support_hi) << ','
     << fmt(r.max_outside) << ',' << fmt(r.fitted_rate) << ',' << r.fit_points << '\n';
}

}  // namespace ch2
