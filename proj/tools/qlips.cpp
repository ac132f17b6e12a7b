// Command-line front end: single runs, parameter sweeps, config inspection.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qlips/qlips.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kDiverged = 4 };

struct Overrides {
  std::string example;
  std::string config_file;
  std::optional<int> mp;
  std::optional<double> contrast;
  std::optional<int> petals;
  std::optional<std::uint64_t> seed;
  bool no_correction = false;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--example", o.example, "builtin example id (ex1..ex6)");
  cmd->add_option("--config", o.config_file, "JSON config file");
  cmd->add_option("--mp", o.mp, "correction neurons per subdomain");
  cmd->add_option("--contrast", o.contrast, "ex4: coefficient value on the outer side");
  cmd->add_option("--petals", o.petals, "ex3: petal count");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_flag("--no-correction", o.no_correction, "stop after initialization");
  cmd->add_option("--out", o.out, "output directory");
}

qlips::RunConfig resolve(const Overrides& o) {
  qlips::Json j = o.config_file.empty() ? qlips::Json::object() : qlips::load_json_file(o.config_file);
  if (o.seed) j["seed"] = *o.seed;
  qlips::RunConfig c = qlips::parse_config(
      j, o.example.empty() ? std::nullopt : std::optional<std::string>(o.example));
  if (o.mp) {
    if (*o.mp < 1) throw qlips::ConfigError("--mp must be positive");
    c.correction.spec.m_p = *o.mp;
  }
  if (o.contrast) c.params.contrast = *o.contrast;
  if (o.petals) c.params.petals = *o.petals;
  if (o.no_correction) c.correction.enabled = false;
  if (!o.out.empty()) {
    c.out_dir = o.out;
  } else if (c.out_dir.empty()) {
    const char* env = std::getenv("QLIPS_OUT");
    c.out_dir = (fs::path(env && *env ? env : "qlips_runs") / c.example).string();
  }
  return c;
}

void write_error(const std::string& dir, int code, const std::string& kind, const std::string& msg) {
  std::cerr << "error: " << msg << '\n';
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(fs::path(dir) / "error.json");
  if (out) out << qlips::error_record(code, kind, msg).dump(2) << '\n';
}

template <class F>
int guarded(const std::string& dir, F&& body) {
  try {
    return body();
  } catch (const qlips::ConfigError& e) {
    write_error(dir, kConfig, "config", e.what());
    return kConfig;
  } catch (const qlips::NumericalError& e) {
    write_error(dir, kNumerical, "numerical", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    write_error(dir, kFailure, "failure", e.what());
    return kFailure;
  }
}

void summarize(const qlips::RunResult& r) {
  const auto& e0 = r.init.errors.global;
  fmt::print("{}: init  {} iterations, L2 {:.3e}, Linf {:.3e} ({:.1f} s)\n", r.config.example,
             r.init.report.iterations, e0.l2, e0.linf, r.init_seconds);
  if (r.correction && r.correction->skipped())
    fmt::print("{}: correction skipped (eps = {:.3e})\n", r.config.example, r.correction->epsilon());
  if (r.corrected) {
    const auto& e1 = r.corrected->errors.global;
    fmt::print("{}: corr  {} iterations, eps {:.3e}, L2 {:.3e}, Linf {:.3e} ({:.1f} s)\n",
               r.config.example, r.corrected->report.iterations, r.correction->epsilon(), e1.l2,
               e1.linf, r.correction_seconds);
  }
  fmt::print("artifacts: {}\n", r.config.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-linear interface problems with random-feature networks"};
  app.require_subcommand(1);

  Overrides run_o;
  auto* run = app.add_subcommand("run", "initialization and correction for one configuration");
  add_common(run, run_o);

  Overrides sweep_o;
  std::string axis;
  std::vector<std::string> values;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "one run per value of an axis");
  add_common(sweep, sweep_o);
  sweep->add_option("--axis", axis, "mp, contrast, petals or seed")->required();
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  Overrides show_o;
  auto* show = app.add_subcommand("show-config", "print the resolved configuration");
  add_common(show, show_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*run) {
    std::string dir = run_o.out;
    return guarded(dir, [&] {
      const qlips::RunConfig cfg = resolve(run_o);
      dir = cfg.out_dir;
      const qlips::RunResult r = qlips::run_pipeline(cfg);
      qlips::write_artifacts(r, cfg.out_dir);
      summarize(r);
      if (r.diverged()) {
        write_error(cfg.out_dir, kDiverged, "divergence", "Gauss-Newton residual diverged");
        return static_cast<int>(kDiverged);
      }
      return static_cast<int>(kOk);
    });
  }
  if (*sweep) {
    std::string dir = sweep_o.out;
    return guarded(dir, [&] {
      qlips::RunConfig cfg = resolve(sweep_o);
      dir = cfg.out_dir;
      const auto rows = qlips::run_sweep(cfg, qlips::parse_axis(axis), values, cfg.out_dir, jobs);
      int failed = 0;
      for (const auto& r : rows) {
        fmt::print("{}={}: {}", axis, r.value, r.ok ? "ok" : "failed");
        if (r.corrected) fmt::print(", corrected L2 {:.3e}", r.corrected->l2);
        if (!r.message.empty()) fmt::print(" ({})", r.message);
        fmt::print("\n");
        failed += r.ok ? 0 : 1;
      }
      fmt::print("summary: {}/sweep.csv\n", cfg.out_dir);
      return failed == 0 ? static_cast<int>(kOk) : static_cast<int>(kFailure);
    });
  }
  return guarded("", [&] {
    fmt::print("{}\n", qlips::to_json(resolve(show_o)).dump(2));
    return static_cast<int>(kOk);
  });
}
