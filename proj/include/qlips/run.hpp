#pragma once

#include <fmt/format.h>
#include <fmt/os.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qlips/assembly.hpp"
#include "qlips/config.hpp"
#include "qlips/metrics.hpp"
#include "qlips/perturbation.hpp"
#include "qlips/problem.hpp"

namespace qlips {

struct StageOutcome {
  SolveReport report;
  ErrorReport errors;
  std::vector<GroupNorm> groups;  // residual groups on the correction set
  std::vector<double> abs_error;  // on the metrics grid
};

struct RunResult {
  RunConfig config;
  InterfaceProblem problem;
  std::vector<GridPoint> grid;
  StageOutcome init;
  std::optional<StageOutcome> corrected;
  std::optional<CorrectionResult> correction;
  std::vector<TraceRow> trace;
  double init_seconds = 0.0;
  double correction_seconds = 0.0;

  bool diverged() const {
    if (init.report.status == SolveStatus::diverged) return true;
    if (correction)
      for (const auto& r : correction->rounds)
        if (!r.skipped && r.report.status == SolveStatus::diverged) return true;
    return false;
  }
};

/// Initialization, optional correction and all metrics for one configuration.
inline RunResult run_pipeline(const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  InterfaceProblem problem = builtin_example(cfg.example, cfg.params);
  const auto& geom = problem.geometry;

  const auto t0 = clock::now();
  Discretization d0(problem, sample_collocation(geom, cfg.init.collocation.spec(), cfg.init.collocation.seed));
  InitResult init = initialize(d0, cfg.init.net, cfg.init.solver);
  const auto t1 = clock::now();

  RunResult res{cfg, problem, {}, {}, {}, {}, {}, 0.0, 0.0};
  res.init.report = std::move(init.report);
  res.init_seconds = std::chrono::duration<double>(t1 - t0).count();

  std::optional<Discretization> d1;
  if (cfg.correction.enabled) {
    d1.emplace(problem, sample_collocation(geom, cfg.correction.collocation.spec(),
                                           cfg.correction.collocation.seed));
    res.correction = correct(*d1, init.solution, cfg.correction.spec, cfg.correction.solver);
    res.correction_seconds = std::chrono::duration<double>(clock::now() - t1).count();
  }
  const Discretization& dm = d1 ? *d1 : d0;
  res.init.groups = residual_diagnostics(assemble_state(dm, init.solution.evaluate(dm)));

  const ErrorEvaluator ev(problem, cfg.metrics.grid);
  res.grid = ev.points();
  const auto outcome = [&](const LayeredSolution& sol, StageOutcome& st) {
    const std::vector<double> v = ev.sample([&](const Point& p, int s) { return sol.value(p, s); });
    st.errors = ev.errors(v);
    st.abs_error.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) st.abs_error[i] = std::abs(v[i] - ev.exact()[i]);
  };
  outcome(init.solution, res.init);

  const LayeredSolution& final_solution = res.correction ? res.correction->solution : init.solution;
  if (res.correction && res.correction->solution.corrected()) {
    res.corrected.emplace();
    res.corrected->report = res.correction->report();
    outcome(final_solution, *res.corrected);
    res.corrected->groups = residual_diagnostics(assemble_state(dm, final_solution.evaluate(dm)));
  }
  const double t_slice = geom.box().timed ? geom.box().t_max : 0.0;
  res.trace = interface_trace(problem, final_solution, cfg.metrics.trace_samples, t_slice);
  return res;
}

// Artifact writing

namespace detail {

inline std::string num(double v) { return fmt::format("{:.17g}", v); }

inline Json errors_json(const ErrorReport& e) {
  Json j{{"relative_l2", e.global.l2}, {"relative_linf", e.global.linf}, {"test_points", e.points}};
  Json per = Json::object();
  for (std::size_t s = 0; s < e.names.size(); ++s)
    per[e.names[s]] = {{"relative_l2", e.per_subdomain[s].l2}, {"relative_linf", e.per_subdomain[s].linf}};
  j["per_subdomain"] = per;
  return j;
}

inline Json groups_json(const std::vector<GroupNorm>& g) {
  Json j = Json::array();
  for (const auto& x : g)
    j.push_back({{"group", x.name}, {"rows", x.rows}, {"scaled_norm", x.scaled}, {"unscaled_norm", x.unscaled}});
  return j;
}

inline Json report_json(const SolveReport& r) {
  return Json{{"status", to_string(r.status)},
              {"iterations", r.iterations},
              {"residual_history", r.residual_history},
              {"relative_change", r.relative_change},
              {"rank_history", r.rank_history},
              {"min_retained_singular_value", r.sigma_min_history},
              {"step_fraction", r.step_history},
              {"wall_seconds", r.wall_seconds}};
}

inline void write_heatmap(const std::filesystem::path& file, const std::vector<GridPoint>& grid,
                          const std::vector<double>& err, bool timed) {
  auto out = fmt::output_file(file.string());
  out.print("{}", timed ? "x,y,t,abs_error\n" : "x,y,abs_error\n");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& p = grid[i].point;
    if (timed) out.print("{},{},{},{}\n", num(p.x), num(p.y), num(p.t), num(err[i]));
    else out.print("{},{},{}\n", num(p.x), num(p.y), num(err[i]));
  }
}

}  // namespace detail

inline Json result_json(const RunResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["example"] = r.config.example;
  j["config"] = to_json(r.config);
  j["rng"] = {{"family", detail::Rng::kFamily}, {"seed", r.config.seed}};
  j["status"] = r.diverged() ? "diverged" : "ok";
  j["initialization"] = {{"solve", detail::report_json(r.init.report)},
                         {"errors", detail::errors_json(r.init.errors)},
                         {"residual_groups", detail::groups_json(r.init.groups)},
                         {"wall_seconds", r.init_seconds}};
  if (r.correction) {
    Json c;
    c["epsilon"] = r.correction->epsilon();
    c["skipped"] = r.correction->skipped();
    Json rounds = Json::array();
    for (const auto& rd : r.correction->rounds) {
      Json x{{"epsilon", rd.epsilon}, {"skipped", rd.skipped}, {"residual_before", rd.residual_before},
             {"residual_after", rd.residual_after}};
      if (!rd.skipped) x["solve"] = detail::report_json(rd.report);
      rounds.push_back(x);
    }
    c["rounds"] = rounds;
    if (r.corrected) {
      c["errors"] = detail::errors_json(r.corrected->errors);
      c["residual_groups"] = detail::groups_json(r.corrected->groups);
      const auto& sm = r.corrected->report.sigma_min_history;
      c["min_retained_singular_value"] = sm.empty() ? 0.0 : sm.back();
    }
    c["wall_seconds"] = r.correction_seconds;
    j["correction"] = c;
  }
  return j;
}

/// Writes report.json and the CSV artifacts into `dir`.
inline void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using detail::num;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    out << result_json(r).dump(2) << '\n';
    if (!out) throw Error("cannot write " + (dir / "report.json").string());
  }
  {
    auto out = fmt::output_file((dir / "residual_history.csv").string());
    out.print("stage,round,iteration,residual_norm,relative_change,rank\n");
    const auto dump = [&](const char* stage, int round, const SolveReport& rep) {
      for (std::size_t k = 0; k < rep.residual_history.size(); ++k) {
        const std::string change = k == 0 ? "" : num(rep.relative_change[k - 1]);
        const std::string rank = k == 0 ? "" : std::to_string(rep.rank_history[k - 1]);
        out.print("{},{},{},{},{},{}\n", stage, round, k, num(rep.residual_history[k]), change, rank);
      }
    };
    dump("init", 0, r.init.report);
    if (r.correction)
      for (std::size_t k = 0; k < r.correction->rounds.size(); ++k)
        if (!r.correction->rounds[k].skipped)
          dump("correction", static_cast<int>(k) + 1, r.correction->rounds[k].report);
  }
  {
    auto out = fmt::output_file((dir / "errors_table.csv").string());
    out.print("region,init_l2,init_linf,corrected_l2,corrected_linf\n");
    const auto row = [&](const std::string& name, ErrorPair a, std::optional<ErrorPair> b) {
      out.print("{},{},{},{},{}\n", name, num(a.l2), num(a.linf), b ? num(b->l2) : "", b ? num(b->linf) : "");
    };
    const auto& e0 = r.init.errors;
    std::optional<ErrorReport> e1;
    if (r.corrected) e1 = r.corrected->errors;
    row("global", e0.global, e1 ? std::optional<ErrorPair>(e1->global) : std::nullopt);
    for (std::size_t s = 0; s < e0.names.size(); ++s)
      row(e0.names[s], e0.per_subdomain[s],
          e1 ? std::optional<ErrorPair>(e1->per_subdomain[s]) : std::nullopt);
  }
  const bool timed = r.problem.geometry.time_dependent();
  detail::write_heatmap(dir / "heatmap_init.csv", r.grid, r.init.abs_error, timed);
  if (r.corrected) detail::write_heatmap(dir / "heatmap_corrected.csv", r.grid, r.corrected->abs_error, timed);
  {
    auto out = fmt::output_file((dir / "interface_trace.csv").string());
    out.print("param,x,y,base_error,correction\n");
    for (const auto& t : r.trace)
      out.print("{},{},{},{},{}\n", num(t.param), num(t.x), num(t.y), num(t.base_error), num(t.correction));
  }
}

inline Json error_record(int exit_code, const std::string& kind, const std::string& message) {
  return Json{{"schema_version", kSchemaVersion}, {"status", "error"}, {"kind", kind},
              {"message", message}, {"exit_code", exit_code}};
}

// Sweeps

enum class SweepAxis { mp, contrast, petals, seed };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "mp") return SweepAxis::mp;
  if (s == "contrast") return SweepAxis::contrast;
  if (s == "petals") return SweepAxis::petals;
  if (s == "seed") return SweepAxis::seed;
  throw ConfigError("unknown sweep axis '" + s + "' (expected mp, contrast, petals or seed)");
}

/// Copy of `base` with one axis set to `value`.
inline RunConfig apply_axis(RunConfig c, SweepAxis axis, const std::string& value) {
  try {
    std::size_t used = 0;
    switch (axis) {
      case SweepAxis::mp:
        c.correction.spec.m_p = std::stoi(value, &used);
        if (c.correction.spec.m_p < 1) throw ConfigError("m_p must be positive");
        break;
      case SweepAxis::contrast:
        if (c.example != "ex4") throw ConfigError("the contrast axis applies to ex4 only");
        c.params.contrast = std::stod(value, &used);
        break;
      case SweepAxis::petals:
        if (c.example != "ex3") throw ConfigError("the petals axis applies to ex3 only");
        c.params.petals = std::stoi(value, &used);
        break;
      case SweepAxis::seed:
        c.seed = std::stoull(value, &used);
        detail::derive_seeds(c);
        break;
    }
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::logic_error&) {
    throw ConfigError("invalid sweep value '" + value + "'");
  }
  return c;
}

struct SweepRow {
  std::string value;
  bool ok = false;
  std::string message;
  std::optional<ErrorPair> init, corrected;
  int init_iterations = 0;
  int correction_iterations = 0;
  double residual = 0.0;
};

/// One run per value, each in its own subdirectory, aggregated into sweep.csv.
/// Failed runs are recorded and the sweep continues.
inline std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis,
                                       const std::vector<std::string>& values,
                                       const std::filesystem::path& root, int jobs = 1) {
  for (const auto& v : values) apply_axis(base, axis, v);  // fail fast on bad values
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t k = next++; k < values.size(); k = next++) {
      SweepRow& row = rows[k];
      row.value = values[k];
      try {
        const RunConfig cfg = apply_axis(base, axis, values[k]);
        const RunResult r = run_pipeline(cfg);
        write_artifacts(r, root / ("value_" + values[k]));
        row.init = r.init.errors.global;
        row.init_iterations = r.init.report.iterations;
        row.residual = r.init.report.final_residual();
        if (r.corrected) {
          row.corrected = r.corrected->errors.global;
          row.correction_iterations = r.corrected->report.iterations;
          row.residual = r.correction->rounds.back().residual_after;
        }
        row.ok = !r.diverged();
        if (!row.ok) row.message = "diverged";
      } catch (const std::exception& e) {
        row.ok = false;
        row.message = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(root);
  auto out = fmt::output_file((root / "sweep.csv").string());
  out.print("value,status,init_l2,init_linf,corrected_l2,corrected_linf,init_iterations,"
            "correction_iterations,residual_norm,message\n");
  using detail::num;
  for (const auto& r : rows) {
    std::string msg = r.message;
    for (char& ch : msg)
      if (ch == ',' || ch == '\n') ch = ';';
    out.print("{},{},{},{},{},{},{},{},{},{}\n", r.value, r.ok ? "ok" : "failed",
              r.init ? num(r.init->l2) : "", r.init ? num(r.init->linf) : "",
              r.corrected ? num(r.corrected->l2) : "", r.corrected ? num(r.corrected->linf) : "",
              r.init_iterations, r.correction_iterations, num(r.residual), msg);
  }
  return rows;
}

}  // namespace qlips
