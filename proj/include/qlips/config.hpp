#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qlips/basis.hpp"
#include "qlips/errors.hpp"
#include "qlips/geometry.hpp"
#include "qlips/metrics.hpp"
#include "qlips/perturbation.hpp"
#include "qlips/problem.hpp"
#include "qlips/solver.hpp"

namespace qlips {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct CollocationConfig {
  std::vector<std::size_t> interior;  // per subdomain
  std::size_t interface = 0;
  std::size_t boundary = 0;
  SamplingStrategy strategy = SamplingStrategy::seeded_uniform_random;
  std::uint64_t seed = 0;
  std::vector<double> interior_weights;  // empty = all 1
  double interface_value_weight = 1.0;
  double interface_flux_weight = 1.0;
  double boundary_weight = 1.0;
  double initial_fraction = 0.5;

  CollocationSpec spec() const {
    CollocationSpec s;
    s.interior = interior;
    s.interface = interface;
    s.boundary = boundary;
    s.strategy = strategy;
    s.weights = {interior_weights, interface_value_weight, interface_flux_weight, boundary_weight};
    s.initial_fraction = initial_fraction;
    return s;
  }
};

struct StageConfig {
  NetSpec net;
  CollocationConfig collocation;
  SolverOptions solver;
};

struct CorrectionConfig {
  bool enabled = true;
  CorrectionSpec spec;
  CollocationConfig collocation;
  SolverOptions solver;
};

struct MetricsConfig {
  TestGrid grid;
  int trace_samples = 400;
};

/// Everything a run needs. Every field has a default; `example_config` fills
/// the per-example values.
struct RunConfig {
  std::string example = "ex1";
  ExampleParams params;
  std::uint64_t seed = 1;
  StageConfig init;
  CorrectionConfig correction;
  MetricsConfig metrics;
  std::string out_dir;  // empty: resolved by the caller
};

namespace detail {

inline void derive_seeds(RunConfig& c) {
  c.init.net.seed = sub_seed(c.seed, 1);
  c.init.collocation.seed = sub_seed(c.seed, 2);
  c.correction.spec.seed = sub_seed(c.seed, 3);
  c.correction.collocation.seed = sub_seed(c.seed, 4);
}

inline CollocationConfig colloc(std::vector<std::size_t> interior, std::size_t interface,
                                std::size_t boundary) {
  CollocationConfig c;
  c.interior = std::move(interior);
  c.interface = interface;
  c.boundary = boundary;
  return c;
}

}  // namespace detail

/// Default run configuration of a builtin example.
inline RunConfig example_config(const std::string& id, std::uint64_t seed = 1) {
  constexpr double pi = std::numbers::pi;
  RunConfig c;
  c.example = id;
  c.seed = seed;
  c.init.net = {100, Activation::tanh, {-1.0, 1.0}, {-0.1, 0.1}, 0};
  c.init.solver.stop_tol = 1e-6;
  c.init.solver.svd_threshold = 1e-13;
  c.correction.spec.m_p = 600;
  c.correction.spec.weight_range = {-4.0 * pi, 4.0 * pi};
  c.correction.spec.bias_range = {-pi, pi};
  c.correction.solver.stop_tol = 1e-6;
  c.correction.solver.svd_threshold = 1e-13;
  for (SolverOptions* s : {&c.init.solver, &c.correction.solver}) {
    s->equilibrate = true;
    s->backtrack_on_growth = true;
  }

  if (id == "ex1") {
    c.init.collocation = detail::colloc({10000, 10000}, 304, 1512);
    c.correction.collocation = detail::colloc({16900, 16900}, 352, 1600);
  } else if (id == "ex2") {
    c.init.collocation = detail::colloc({5000, 5000, 5000, 5000}, 400, 1600);
    c.correction.collocation = detail::colloc({8000, 8000, 8000, 8000}, 800, 2000);
    c.correction.spec.m_p = 400;
  } else if (id == "ex3") {
    c.init.net = {300, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 0};
    c.init.collocation = detail::colloc({12000, 6000}, 1200, 1600);
    c.correction.collocation = detail::colloc({16000, 10000}, 2000, 2000);
    c.init.solver.svd_threshold = 1e-10;
    c.correction.spec.m_p = 800;
    c.correction.spec.weight_range = {-7.0 * pi, 7.0 * pi};
  } else if (id == "ex4") {
    c.init.net = {200, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 0};
    c.init.collocation = detail::colloc({10000, 6000}, 800, 1600);
    c.correction.collocation = detail::colloc({14000, 8000}, 1200, 2000);
    c.correction.spec.m_p = 600;
    c.init.collocation.boundary_weight = 1e4;
    c.correction.collocation.boundary_weight = 1e4;
    c.correction.collocation.interface_value_weight = 1e2;
    c.correction.collocation.interface_flux_weight = 1e-2;
  } else if (id == "ex5") {
    c.init.net = {400, Activation::tanh, {-1.0, 1.0}, {-1.0, 1.0}, 0};
    c.init.collocation = detail::colloc({12000, 6000}, 1200, 3000);
    c.correction.collocation = detail::colloc({16000, 8000}, 1600, 4000);
    c.correction.spec.m_p = 1200;
    c.correction.spec.weight_range = {-2.0 * pi, 2.0 * pi};
  } else if (id == "ex6") {
    c.init.net = {200, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 0};
    c.init.collocation = detail::colloc({10000, 6000}, 800, 1600);
    c.correction.collocation = detail::colloc({14000, 8000}, 1200, 2000);
    c.correction.spec.m_p = 600;
    c.correction.spec.weight_range = {-7.0 * pi, 7.0 * pi};
  } else {
    throw ConfigError("unknown example id '" + id + "'");
  }
  c.metrics.grid = TestGrid::defaults_for(id == "ex5");
  detail::derive_seeds(c);
  return c;
}

// JSON mapping

inline Json range_json(Range r) { return Json::array({r.lo, r.hi}); }

inline Json to_json(const CollocationConfig& c) {
  return Json{{"interior", c.interior},
              {"interface", c.interface},
              {"boundary", c.boundary},
              {"strategy", to_string(c.strategy)},
              {"seed", c.seed},
              {"interior_weights", c.interior_weights},
              {"interface_value_weight", c.interface_value_weight},
              {"interface_flux_weight", c.interface_flux_weight},
              {"boundary_weight", c.boundary_weight},
              {"initial_fraction", c.initial_fraction}};
}

inline Json to_json(const SolverOptions& s) {
  return Json{{"max_iters", s.max_iters},       {"svd_threshold", s.svd_threshold},
              {"stop_tol", s.stop_tol},         {"damping", s.damping},
              {"backtracking", s.backtracking}, {"max_halvings", s.max_halvings},
              {"divergence_factor", s.divergence_factor},
              {"equilibrate", s.equilibrate},   {"backtrack_on_growth", s.backtrack_on_growth}};
}

inline Json to_json(const RunConfig& c) {
  Json j;
  j["example"] = c.example;
  j["params"] = {{"contrast", c.params.contrast},
                 {"petals", c.params.petals},
                 {"r0", c.params.r0},
                 {"amplitude", c.params.amplitude},
                 {"horizon", c.params.horizon}};
  j["seed"] = c.seed;
  j["init"] = {{"m", c.init.net.neurons},
               {"activation", to_string(c.init.net.activation)},
               {"weight_range", range_json(c.init.net.weight_range)},
               {"bias_range", range_json(c.init.net.bias_range)},
               {"seed", c.init.net.seed},
               {"collocation", to_json(c.init.collocation)},
               {"solver", to_json(c.init.solver)}};
  j["correction"] = {{"enabled", c.correction.enabled},
                     {"m_p", c.correction.spec.m_p},
                     {"activation", to_string(c.correction.spec.activation)},
                     {"weight_range", range_json(c.correction.spec.weight_range)},
                     {"bias_range", range_json(c.correction.spec.bias_range)},
                     {"seed", c.correction.spec.seed},
                     {"keep_second_order", c.correction.spec.keep_second_order},
                     {"rounds", c.correction.spec.rounds},
                     {"collocation", to_json(c.correction.collocation)},
                     {"solver", to_json(c.correction.solver)}};
  j["metrics"] = {{"grid", Json::array({c.metrics.grid.nx, c.metrics.grid.ny})},
                  {"time_slices", c.metrics.grid.nt},
                  {"interface_band", c.metrics.grid.band},
                  {"trace_samples", c.metrics.trace_samples}};
  j["out_dir"] = c.out_dir;
  return j;
}

namespace detail {

/// Reads keys from one JSON object and rejects anything left unread.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + join(key) + "'");
  }

  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config key '" + join(key) + "' has the wrong type");
    }
  }

  void range(const std::string& key, Range& r) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError("config key '" + join(key) + "' must be [lo, hi]");
    r = {v[0].get<double>(), v[1].get<double>()};
    if (!(r.hi >= r.lo)) throw ConfigError("config key '" + join(key) + "' needs lo <= hi");
  }

  void activation(const std::string& key, Activation& a) {
    if (!has(key)) return;
    const std::string s = j_.at(key).is_string() ? j_.at(key).get<std::string>() : "";
    if (s == "tanh") a = Activation::tanh;
    else if (s == "sin") a = Activation::sin;
    else throw ConfigError("config key '" + join(key) + "' must be \"tanh\" or \"sin\"");
  }

  const Json& child(const std::string& key) { return j_.at(key); }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_collocation(const Json& j, const std::string& path, CollocationConfig& c) {
  ObjectReader r(j, path);
  r.get("interior", c.interior);
  r.get("interface", c.interface);
  r.get("boundary", c.boundary);
  if (r.has("strategy")) {
    const std::string s = j.at("strategy").is_string() ? j.at("strategy").get<std::string>() : "";
    if (s == "uniform_grid") c.strategy = SamplingStrategy::uniform_grid;
    else if (s == "seeded_uniform_random") c.strategy = SamplingStrategy::seeded_uniform_random;
    else throw ConfigError("config key '" + path + ".strategy' is not a known strategy");
  }
  r.get("seed", c.seed);
  r.get("interior_weights", c.interior_weights);
  r.get("interface_value_weight", c.interface_value_weight);
  r.get("interface_flux_weight", c.interface_flux_weight);
  r.get("boundary_weight", c.boundary_weight);
  r.get("initial_fraction", c.initial_fraction);
}

inline void read_solver(const Json& j, const std::string& path, SolverOptions& s) {
  ObjectReader r(j, path);
  r.get("max_iters", s.max_iters);
  r.get("svd_threshold", s.svd_threshold);
  r.get("stop_tol", s.stop_tol);
  r.get("damping", s.damping);
  r.get("backtracking", s.backtracking);
  r.get("max_halvings", s.max_halvings);
  r.get("divergence_factor", s.divergence_factor);
  r.get("equilibrate", s.equilibrate);
  r.get("backtrack_on_growth", s.backtrack_on_growth);
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Example defaults overlaid with the keys present in `j`. Unknown keys are
/// rejected. A top-level "seed" re-derives every stage seed unless the stage
/// sets its own.
inline RunConfig parse_config(const Json& j, std::optional<std::string> example_override = {}) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::string id = "ex1";
  if (j.contains("example")) {
    if (!j.at("example").is_string()) throw ConfigError("config key 'example' must be a string");
    id = j.at("example").get<std::string>();
  }
  if (example_override) id = *example_override;
  std::uint64_t seed = 1;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
    seed = j.at("seed").get<std::uint64_t>();
  }
  RunConfig c = example_config(id, seed);

  detail::ObjectReader r(j, "");
  r.has("example");
  r.has("seed");
  if (r.has("params")) {
    detail::ObjectReader p(r.child("params"), "params");
    p.get("contrast", c.params.contrast);
    p.get("petals", c.params.petals);
    p.get("r0", c.params.r0);
    p.get("amplitude", c.params.amplitude);
    p.get("horizon", c.params.horizon);
  }
  if (r.has("init")) {
    const Json& ji = r.child("init");
    detail::ObjectReader p(ji, "init");
    p.get("m", c.init.net.neurons);
    p.activation("activation", c.init.net.activation);
    p.range("weight_range", c.init.net.weight_range);
    p.range("bias_range", c.init.net.bias_range);
    p.get("seed", c.init.net.seed);
    if (p.has("collocation")) detail::read_collocation(ji.at("collocation"), "init.collocation", c.init.collocation);
    if (p.has("solver")) detail::read_solver(ji.at("solver"), "init.solver", c.init.solver);
  }
  if (r.has("correction")) {
    const Json& jc = r.child("correction");
    detail::ObjectReader p(jc, "correction");
    p.get("enabled", c.correction.enabled);
    p.get("m_p", c.correction.spec.m_p);
    p.activation("activation", c.correction.spec.activation);
    p.range("weight_range", c.correction.spec.weight_range);
    p.range("bias_range", c.correction.spec.bias_range);
    p.get("seed", c.correction.spec.seed);
    p.get("keep_second_order", c.correction.spec.keep_second_order);
    p.get("rounds", c.correction.spec.rounds);
    if (p.has("collocation"))
      detail::read_collocation(jc.at("collocation"), "correction.collocation", c.correction.collocation);
    if (p.has("solver")) detail::read_solver(jc.at("solver"), "correction.solver", c.correction.solver);
  }
  if (r.has("metrics")) {
    detail::ObjectReader p(r.child("metrics"), "metrics");
    if (p.has("grid")) {
      const Json& g = j.at("metrics").at("grid");
      if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer())
        throw ConfigError("config key 'metrics.grid' must be [nx, ny]");
      c.metrics.grid.nx = g[0].get<int>();
      c.metrics.grid.ny = g[1].get<int>();
    }
    p.get("time_slices", c.metrics.grid.nt);
    p.get("interface_band", c.metrics.grid.band);
    p.get("trace_samples", c.metrics.trace_samples);
  }
  r.get("out_dir", c.out_dir);

  if (c.init.net.neurons < 1 || c.correction.spec.m_p < 1)
    throw ConfigError("neuron counts must be positive");
  if (c.correction.spec.rounds < 1) throw ConfigError("correction.rounds must be >= 1");
  if (c.metrics.trace_samples < 1) throw ConfigError("metrics.trace_samples must be >= 1");
  return c;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace qlips
