#pragma once

// Run configuration: a JSON document validated exhaustively before any
// computation. Physics parameters have no defaults; only output settings do.
//
// {
//   "grid":    {"n": 256, "length": 40},
//   "params":  {"sigma": -1, "lambda": 1, "p": 3},
//   "initial": {"type": "soliton", "a": 1, "x0": 0, "velocity": 0},
//   "solver":  {"dt": 0.001, "t_end": 1, "integrator": "strang", "dealias": false, "linear": false},
//   "outputs": {"diagnostics_path": "diagnostics.csv", "fields_dir": "fields", "record_every": 10}
// }
//
// initial.type is one of plane_wave{A, k_index}, soliton{a, x0, velocity?},
// gaussian{A, x0, k0, w}, file{path}. A relative file path is resolved
// against the directory of the config file.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>

#include "json.hpp"
#include "nlslab/csv.hpp"
#include "nlslab/dynamics.hpp"
#include "nlslab/smoothing.hpp"
#include "nlslab/spectral.hpp"

namespace nlslab {

/// Schema or precondition violation; `key` is the dotted path of the
/// offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct PlaneWaveInit {
  double amplitude;
  long k_index;
};
struct SolitonInit {
  double a;
  double x0;
  double velocity = 0.0;
};
struct GaussianInit {
  double amplitude;
  double x0;
  double k0;
  double width;
};
struct FileInit {
  std::string path;
};
using InitialData = std::variant<PlaneWaveInit, SolitonInit, GaussianInit, FileInit>;

struct OutputConfig {
  std::string diagnostics_path = "diagnostics.csv";
  std::optional<std::string> fields_dir;
  int record_every = 1;
};

struct RunConfig {
  std::size_t n = 0;
  double length = 0.0;
  NlsParams params;
  std::optional<InitialData> initial;
  SolverConfig solver;
  OutputConfig outputs;
  std::filesystem::path base_dir;

  Grid1D grid() const { return Grid1D(n, length); }
};

namespace detail {

using json = nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const json& require_object(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key, "must be an object");
  return j;
}

inline void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(join(path, k), "unknown key");
  }
}

inline const json& member(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing required key");
  return j.at(key);
}

inline double get_number(const json& j, const std::string& path, const std::string& key) {
  const auto& v = member(j, path, key);
  if (!v.is_number()) throw ConfigError(join(path, key), "must be a number");
  return v.get<double>();
}

inline long get_integer(const json& j, const std::string& path, const std::string& key) {
  const auto& v = member(j, path, key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "must be an integer");
  return v.get<long>();
}

inline bool get_bool(const json& j, const std::string& path, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "must be a boolean");
  return v.get<bool>();
}

inline std::string get_string(const json& j, const std::string& path, const std::string& key) {
  const auto& v = member(j, path, key);
  if (!v.is_string()) throw ConfigError(join(path, key), "must be a string");
  return v.get<std::string>();
}

inline InitialData parse_initial(const json& j) {
  require_object(j, "initial");
  const auto type = get_string(j, "initial", "type");
  if (type == "plane_wave") {
    reject_unknown(j, "initial", {"type", "A", "k_index"});
    return PlaneWaveInit{get_number(j, "initial", "A"), get_integer(j, "initial", "k_index")};
  }
  if (type == "soliton") {
    reject_unknown(j, "initial", {"type", "a", "x0", "velocity"});
    SolitonInit s{get_number(j, "initial", "a"), get_number(j, "initial", "x0")};
    if (j.contains("velocity")) s.velocity = get_number(j, "initial", "velocity");
    return s;
  }
  if (type == "gaussian") {
    reject_unknown(j, "initial", {"type", "A", "x0", "k0", "w"});
    return GaussianInit{get_number(j, "initial", "A"), get_number(j, "initial", "x0"),
                        get_number(j, "initial", "k0"), get_number(j, "initial", "w")};
  }
  if (type == "file") {
    reject_unknown(j, "initial", {"type", "path"});
    return FileInit{get_string(j, "initial", "path")};
  }
  throw ConfigError("initial.type", "unknown initial data type '" + type + "'");
}

inline Range get_range(const json& j, const std::string& path, const std::string& key) {
  const auto& v = member(j, path, key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(join(path, key), "must be a [lo, hi] pair of numbers");
  }
  Range r{v[0].get<double>(), v[1].get<double>()};
  if (r.hi < r.lo) throw ConfigError(join(path, key), "lo must not exceed hi");
  return r;
}

}  // namespace detail

/// Builds the initial field; module preconditions surface as ConfigError.
inline ComplexField1D make_initial_field(const RunConfig& cfg) {
  if (!cfg.initial) throw ConfigError("initial", "missing required key");
  const auto grid = cfg.grid();
  try {
    return std::visit(
        [&](const auto& init) -> ComplexField1D {
          using T = std::decay_t<decltype(init)>;
          if constexpr (std::is_same_v<T, PlaneWaveInit>) {
            return plane_wave(init.amplitude, init.k_index, grid, cfg.params, 0.0);
          } else if constexpr (std::is_same_v<T, SolitonInit>) {
            return bright_soliton(init.a, init.x0, grid, 0.0, init.velocity);
          } else if constexpr (std::is_same_v<T, GaussianInit>) {
            return gaussian_packet(init.amplitude, init.x0, init.k0, init.width, grid);
          } else {
            std::filesystem::path p(init.path);
            if (p.is_relative()) p = cfg.base_dir / p;
            auto u = read_field_snapshot(p.string());
            if (u.size() != grid.n() || std::abs(u.grid().length() - grid.length()) > 1e-9 * grid.length()) {
              throw std::invalid_argument("snapshot grid does not match the configured grid");
            }
            return ComplexField1D(grid, u.vec());
          }
        },
        *cfg.initial);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("initial", e.what());
  }
}

/// Parses and validates a run config. When `need_initial` is false the
/// `initial` section may be omitted (ensemble runs supply their own data).
inline RunConfig parse_run_config(const nlohmann::json& doc, bool need_initial = true) {
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  reject_unknown(doc, "", {"grid", "params", "initial", "solver", "outputs"});

  RunConfig cfg;
  const auto& g = require_object(member(doc, "", "grid"), "grid");
  reject_unknown(g, "grid", {"n", "length"});
  const long n = get_integer(g, "grid", "n");
  if (n < 8 || (n & (n - 1)) != 0) throw ConfigError("grid.n", "must be a power of two >= 8");
  cfg.n = static_cast<std::size_t>(n);
  cfg.length = get_number(g, "grid", "length");
  if (!(cfg.length > 0.0)) throw ConfigError("grid.length", "must be positive");

  const auto& p = require_object(member(doc, "", "params"), "params");
  reject_unknown(p, "params", {"sigma", "lambda", "p"});
  cfg.params.sigma = static_cast<int>(get_integer(p, "params", "sigma"));
  cfg.params.lambda = get_number(p, "params", "lambda");
  cfg.params.p = static_cast<int>(get_integer(p, "params", "p"));
  if (cfg.params.sigma != 1 && cfg.params.sigma != -1) throw ConfigError("params.sigma", "must be +1 or -1");
  if (!(cfg.params.lambda >= 1.0)) throw ConfigError("params.lambda", "must be >= 1");
  if (cfg.params.p < 3 || cfg.params.p % 2 == 0) throw ConfigError("params.p", "must be an odd integer >= 3");

  if (doc.contains("initial")) {
    cfg.initial = parse_initial(doc.at("initial"));
  } else if (need_initial) {
    throw ConfigError("initial", "missing required key");
  }

  const auto& s = require_object(member(doc, "", "solver"), "solver");
  reject_unknown(s, "solver", {"dt", "t_end", "integrator", "dealias", "linear"});
  cfg.solver.dt = get_number(s, "solver", "dt");
  cfg.solver.t_end = get_number(s, "solver", "t_end");
  const auto integrator = get_string(s, "solver", "integrator");
  if (integrator != "strang" && integrator != "rk4") {
    throw ConfigError("solver.integrator", "must be \"strang\" or \"rk4\"");
  }
  cfg.solver.integrator = parse_integrator(integrator);
  cfg.solver.dealias = get_bool(s, "solver", "dealias", false);
  cfg.solver.linear = get_bool(s, "solver", "linear", false);
  if (!(cfg.solver.dt > 0.0)) throw ConfigError("solver.dt", "must be positive");
  if (!(cfg.solver.t_end >= cfg.solver.dt)) throw ConfigError("solver.t_end", "must be >= dt");

  if (doc.contains("outputs")) {
    const auto& o = require_object(doc.at("outputs"), "outputs");
    reject_unknown(o, "outputs", {"diagnostics_path", "fields_dir", "record_every"});
    if (o.contains("diagnostics_path")) cfg.outputs.diagnostics_path = get_string(o, "outputs", "diagnostics_path");
    if (o.contains("fields_dir")) cfg.outputs.fields_dir = get_string(o, "outputs", "fields_dir");
    if (o.contains("record_every")) {
      const long r = get_integer(o, "outputs", "record_every");
      if (r < 1) throw ConfigError("outputs.record_every", "must be >= 1");
      cfg.outputs.record_every = static_cast<int>(r);
    }
  }
  cfg.solver.record_every = cfg.outputs.record_every;

  try {
    cfg.solver.validate(cfg.grid());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("solver.dt", e.what());
  }
  return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("(file)", "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("(file)", std::string("invalid JSON: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path, bool need_initial = true) {
  auto cfg = parse_run_config(read_json_file(path), need_initial);
  cfg.base_dir = std::filesystem::path(path).parent_path();
  if (cfg.initial) make_initial_field(cfg);  // surfaces initial-data preconditions up front
  return cfg;
}

/// Ensemble file:
///   {"family": "gaussian_grid_scan", "count": 20, "seed": 42,
///    "A": [0.5, 2], "w": [0.5, 2], "k0": [-4, 4], "x0": [-5, 5]}
/// random_bandlimited takes "band": [lo, hi] (mode indices) instead of "k0".
inline EnsembleSpec parse_ensemble_spec(const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("(root)", "ensemble must be a JSON object");
  EnsembleSpec spec;
  const auto family = get_string(j, "", "family");
  try {
    spec.family = parse_family(family);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("family", e.what());
  }
  if (spec.family == EnsembleFamily::gaussian_grid_scan) {
    reject_unknown(j, "", {"family", "count", "seed", "A", "w", "k0", "x0"});
    spec.k0 = get_range(j, "", "k0");
  } else {
    reject_unknown(j, "", {"family", "count", "seed", "A", "w", "x0", "band"});
    const auto& b = member(j, "", "band");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number_integer() || !b[1].is_number_integer()) {
      throw ConfigError("band", "must be a [lo, hi] pair of integers");
    }
    spec.band_lo = b[0].get<int>();
    spec.band_hi = b[1].get<int>();
  }
  const long count = get_integer(j, "", "count");
  if (count < 1) throw ConfigError("count", "must be >= 1");
  spec.count = static_cast<int>(count);
  const auto& seed = member(j, "", "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long>() >= 0)) {
    throw ConfigError("seed", "must be a non-negative integer");
  }
  spec.seed = seed.get<std::uint64_t>();
  spec.amplitude = get_range(j, "", "A");
  spec.width = get_range(j, "", "w");
  spec.x0 = get_range(j, "", "x0");
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("band", e.what());
  }
  return spec;
}

}  // namespace nlslab
