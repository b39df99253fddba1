// Command-line front end: simulate, verify, weights-check, sweep.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ch2/runner.hpp"

namespace fs = std::filesystem;

namespace {

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CH2_OUTPUT_ROOT"); env && *env) return env;
  return "ch2_out";
}

// Config file plus any --set key=value overrides, applied in order.
ch2::RunConfig load(const std::string& path, const std::vector<std::string>& sets) {
  ch2::RunConfig c = path.empty() ? ch2::RunConfig{} : ch2::read_config_file(path);
  int n = 0;
  for (const auto& kv : sets) {
    ++n;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ch2::ParseError("--set expects key=value", n);
    ch2::apply_config_key(c, ch2::trim(kv.substr(0, eq)), ch2::trim(kv.substr(eq + 1)), n);
  }
  ch2::validate(c);
  return c;
}

int report(const ch2::RunResult& r, const fs::path& out) {
  for (const auto& o : r.outcomes) {
    std::cout << ch2::to_string(o.check) << ": " << (o.pass ? "pass" : "FAIL") << "  " << o.detail
              << '\n';
  }
  if (!r.message.empty()) std::cerr << r.message << '\n';
  std::cout << "artifacts: " << out.string() << "\nexit " << r.exit_code << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-component Camassa-Holm persistence and asymptotics toolkit"};
  app.require_subcommand(1);

  std::string config, out, root;
  std::vector<std::string> sets, checks;

  auto* sim = app.add_subcommand("simulate", "evolve a configuration and store the trajectory");
  sim->add_option("-c,--config", config, "key=value run configuration");
  sim->add_option("-o,--out", out, "output directory (default <root>/<config stem>)");
  sim->add_option("--root", root, "output root (default $CH2_OUTPUT_ROOT or ./ch2_out)");
  sim->add_option("--set", sets, "override one config key, key=value");

  auto* ver = app.add_subcommand("verify", "simulate and run the requested checks");
  ver->add_option("-c,--config", config, "key=value run configuration");
  ver->add_option("-o,--out", out, "output directory");
  ver->add_option("--root", root, "output root");
  ver->add_option("--set", sets, "override one config key, key=value");
  ver->add_option("--check", checks, "theorem1|diffineq|corollary1|corollary2|decay|propagation|young")
      ->check(CLI::IsMember({"theorem1", "diffineq", "corollary1", "corollary2", "decay",
                             "propagation", "young"}));

  std::string spec_file;
  auto* wc = app.add_subcommand("weights-check", "certify a weight spec file");
  wc->add_option("spec", spec_file, "weight spec (key=value)")->required();

  std::vector<std::string> configs;
  unsigned jobs = 1;
  auto* sw = app.add_subcommand("sweep", "run several configurations in parallel");
  sw->add_option("configs", configs, "configuration files")->required();
  sw->add_option("--root", root, "output root");
  sw->add_option("-j,--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ch2::kExitPrecondition;
  }

  try {
    if (*wc) {
      std::ifstream is(spec_file);
      if (!is) {
        std::cerr << "cannot read " << spec_file << '\n';
        return ch2::kExitPrecondition;
      }
      return ch2::weights_check(is, std::cout, std::cerr);
    }

    if (*sw) {
      std::vector<ch2::SweepJob> list;
      std::map<std::string, int> seen;
      for (const auto& c : configs) {
        std::string stem = fs::path(c).stem().string();
        if (const int k = seen[stem]++; k > 0) stem += "_" + std::to_string(k);
        list.push_back({ch2::read_config_file(c), output_root(root) / stem, stem});
      }
      const auto results = ch2::sweep(list, jobs);
      int worst = 0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        std::cout << list[i].label << ": exit " << results[i].exit_code << '\n';
        worst = std::max(worst, results[i].exit_code);
      }
      return worst;
    }

    ch2::RunConfig cfg = load(config, sets);
    if (*sim) cfg.checks.clear();
    if (*ver && !checks.empty()) {
      cfg.checks.clear();
      for (const auto& c : checks) cfg.checks.insert(ch2::parse_check(c));
    }
    const fs::path dir =
        out.empty() ? output_root(root) / (config.empty() ? "default" : fs::path(config).stem())
                    : fs::path(out);
    return report(ch2::run(cfg, dir), dir);
  } catch (const ch2::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return ch2::kExitPrecondition;
  } catch (const ch2::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ch2::kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return ch2::kExitInternal;
  }
}
