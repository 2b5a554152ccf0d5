#pragma once

// Subcommand implementations behind the `nlslab` executable. Each returns the
// process exit code and writes human output to `out`, errors to `err`.
//
// Exit codes: 0 success, 1 verification or runtime failure, 2 config error,
// 3 solver abort. Error lines on `err` are single-line JSON objects.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlslab/config.hpp"
#include "nlslab/conservation.hpp"
#include "nlslab/csv.hpp"
#include "nlslab/dynamics.hpp"
#include "nlslab/smoothing.hpp"
#include "nlslab/variational.hpp"
#include "nlslab/verify.hpp"

namespace nlslab::cli {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<double> x0;
  int halvings = 3;
  std::optional<std::uint64_t> seed;
  bool dump_fields = false;
  bool dealias = false;
  std::string ensemble_path;
  unsigned threads = 0;
  bool mutate_phase_sign = false;
};

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kSolverAbort = 3 };

/// Worker count from NLSLAB_THREADS (unset or 0 = hardware concurrency).
inline unsigned threads_from_env() {
  const char* v = std::getenv("NLSLAB_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  return (end != v && n > 0) ? static_cast<unsigned>(n) : 0u;
}

namespace detail {

inline void error_line(std::ostream& err, const std::string& kind, const nlohmann::json& extra) {
  nlohmann::json j = extra;
  j["error"] = kind;
  err << j.dump() << '\n';
}

inline std::filesystem::path output_path(const CommonOptions& o, const std::string& name) {
  std::filesystem::path p(name);
  if (p.is_relative()) p = std::filesystem::path(o.out_dir) / p;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

inline std::string json_number(double v) {
  return std::isfinite(v) ? format_double(v) : "null";
}

// Runs a command body, mapping exceptions onto exit codes and error lines.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    error_line(err, "config", {{"key", e.key()}, {"message", e.what()}});
    return kConfigError;
  } catch (const SolverError& e) {
    error_line(err, "solver", {{"message", e.what()}, {"last_good_time", e.last_good_time()}});
    return kSolverAbort;
  } catch (const EnsembleError& e) {
    error_line(err, "ensemble", {{"member", e.member()}, {"message", e.what()}});
    return kSolverAbort;
  } catch (const std::exception& e) {
    error_line(err, "runtime", {{"message", e.what()}});
    return kFailure;
  }
}

inline RunConfig load_config(const CommonOptions& o, bool need_initial = true) {
  if (o.config_path.empty()) throw ConfigError("--config", "a config file is required");
  auto cfg = load_run_config(o.config_path, need_initial);
  if (o.dealias) cfg.solver.dealias = true;
  return cfg;
}

}  // namespace detail

/// Evolves the configured datum and writes the diagnostics CSV, plus field
/// snapshots at recorded times when --dump-fields is set.
inline int cmd_run(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = detail::load_config(o);
    const auto u0 = make_initial_field(cfg);
    if (std::holds_alternative<SolitonInit>(*cfg.initial) &&
        soliton_tail_warning(std::get<SolitonInit>(*cfg.initial).a, cfg.grid())) {
      err << "warning: soliton tail sech(aL/2) exceeds 1e-10 at the box edge\n";
    }
    const auto diag_path = detail::output_path(o, cfg.outputs.diagnostics_path);
    auto diag = detail::open_out(diag_path);
    write_diagnostics_header(diag);

    std::optional<std::filesystem::path> fields_dir;
    if (o.dump_fields) {
      fields_dir = detail::output_path(o, cfg.outputs.fields_dir.value_or("fields"));
      std::filesystem::create_directories(*fields_dir);
    }
    std::size_t record = 0;
    evolve_stream(u0, cfg.params, cfg.solver, [&](double t, const ComplexField1D& u) {
      write_diagnostics_row(diag, conserved_quantities(u, cfg.params, t));
      if (fields_dir) {
        char name[32];
        std::snprintf(name, sizeof(name), "u_%06zu.csv", record);
        write_field_snapshot((*fields_dir / name).string(), u);
      }
      ++record;
    });
    out << "wrote " << diag_path.string() << " (" << record << " records)\n";
    return static_cast<int>(kOk);
  });
}

/// Runs the acceptance suite and prints one line per check.
inline int cmd_verify(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    verify::Options vo;
    vo.flip_nonlinear_phase = o.mutate_phase_sign;
    vo.threads = o.threads;
    const auto result = verify::run_suite(vo, [&](const verify::CheckResult& r) {
      verify::print_result_line(out, r);
      out.flush();
    });
    std::size_t passed = 0;
    for (const auto& c : result.checks) passed += c.pass ? 1 : 0;
    out << passed << "/" << result.checks.size() << " checks passed\n";
    return static_cast<int>(result.all_pass() ? kOk : kFailure);
  });
}

/// Smoothing ensemble for the cubic equation and for the linear flow.
inline int cmd_smoothing(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = detail::load_config(o, false);
    if (o.ensemble_path.empty()) throw ConfigError("--ensemble", "an ensemble file is required");
    EnsembleSpec spec = parse_ensemble_spec(read_json_file(o.ensemble_path));
    if (o.seed) spec.seed = *o.seed;
    const double x0 = o.x0.value_or(0.0);
    const auto grid = cfg.grid();
    try {
      make_ensemble(spec, grid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("ensemble", e.what());
    }

    const auto cubic = empirical_constant(spec, grid, cfg.params, cfg.solver, x0, o.threads);
    auto linear_solver = cfg.solver;
    linear_solver.linear = true;
    const auto linear = empirical_constant(spec, grid, cfg.params, linear_solver, x0, o.threads);

    for (const auto* r : {&cubic, &linear}) {
      for (int id : r->excluded) err << "warning: member " << id << " has vanishing gradient; excluded\n";
    }
    {
      auto f = detail::open_out(detail::output_path(o, "smoothing_ensemble.csv"));
      write_ensemble_csv(f, cubic);
    }
    {
      auto f = detail::open_out(detail::output_path(o, "smoothing_ensemble_linear.csv"));
      write_ensemble_csv(f, linear);
    }
    bool poincare = true;
    for (const auto& row : cubic.rows) poincare = poincare && row.report.poincare.holds();
    {
      auto f = detail::open_out(detail::output_path(o, "summary.json"));
      f << "{\n  \"empirical_constant\": " << detail::json_number(cubic.empirical_constant)
        << ",\n  \"empirical_constant_linear\": " << detail::json_number(linear.empirical_constant)
        << ",\n  \"members\": " << cubic.rows.size() << ",\n  \"excluded\": " << cubic.excluded.size()
        << ",\n  \"poincare_all_hold\": " << (poincare ? "true" : "false") << ",\n  \"x0\": " << format_double(x0)
        << ",\n  \"seed\": " << spec.seed << "\n}\n";
    }
    out << "empirical_constant=" << format_double(cubic.empirical_constant)
        << " empirical_constant_linear=" << format_double(linear.empirical_constant) << '\n';
    return static_cast<int>(kOk);
  });
}

struct ConvergenceRow {
  double dt;
  double diff_to_next;  // max |u(dt) - u(dt/2)|, NaN on the finest level
  double order;         // log2 of consecutive diff ratios, NaN where undefined
};

/// Self-convergence study: final states at dt, dt/2, ..., dt/2^halvings.
inline std::vector<ConvergenceRow> convergence_study(const ComplexField1D& u0, const NlsParams& params,
                                                     SolverConfig solver, int halvings, double* fitted) {
  if (halvings < 2) throw ConfigError("--halvings", "need at least 2 halvings to fit an order");
  std::vector<ComplexField1D> finals;
  std::vector<double> dts;
  for (int level = 0; level <= halvings; ++level) {
    dts.push_back(solver.dt);
    finals.push_back(evolve_final(u0, params, solver));
    solver.dt *= 0.5;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ConvergenceRow> rows;
  std::vector<double> fit_dt, fit_err;
  for (std::size_t i = 0; i < finals.size(); ++i) {
    ConvergenceRow r{dts[i], nan, nan};
    if (i + 1 < finals.size()) {
      r.diff_to_next = max_abs_diff(finals[i], finals[i + 1]);
      fit_dt.push_back(dts[i]);
      fit_err.push_back(r.diff_to_next);
    }
    if (i >= 1 && i + 1 < finals.size()) r.order = std::log2(rows.back().diff_to_next / r.diff_to_next);
    rows.push_back(r);
  }
  if (fitted != nullptr) *fitted = fitted_order(fit_dt, fit_err);
  return rows;
}

inline int cmd_convergence(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = detail::load_config(o);
    const auto u0 = make_initial_field(cfg);
    double fitted = 0.0;
    const auto rows = convergence_study(u0, cfg.params, cfg.solver, o.halvings, &fitted);
    std::ostringstream table;
    table << "dt,diff_to_next,order\n";
    for (const auto& r : rows) {
      table << format_double(r.dt) << ',' << format_double(r.diff_to_next) << ',' << format_double(r.order) << '\n';
    }
    auto f = detail::open_out(detail::output_path(o, "convergence.csv"));
    f << table.str();
    out << table.str() << "integrator=" << to_string(cfg.solver.integrator) << " fitted_order=" << format_double(fitted)
        << '\n';
    return static_cast<int>(kOk);
  });
}

/// Center-of-mass, action, and first-variation diagnostics for one run.
inline int cmd_variational(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = detail::load_config(o);
    const auto u0 = make_initial_field(cfg);
    const auto traj = evolve(u0, cfg.params, cfg.solver);
    const auto rep = center_of_mass_report(traj);
    const auto q0 = conserved_quantities(u0, cfg.params, 0.0);

    TestFieldSpec phi;
    phi.x_center = rep.xcm.front();
    phi.width = 1.0;
    phi.t_center = 0.5 * traj.times.back();
    phi.t_halfwidth = 0.5 * traj.times.back();
    double fv = std::numeric_limits<double>::quiet_NaN(), fv_an = fv;
    try {
      fv = first_variation(traj, phi, 1e-4);
      fv_an = first_variation_analytic(traj, phi);
    } catch (const std::invalid_argument& e) {
      err << "warning: first variation skipped: " << e.what() << '\n';
    }
    {
      auto f = detail::open_out(detail::output_path(o, "variational.csv"));
      write_variational_csv(f, rep);
    }
    {
      auto f = detail::open_out(detail::output_path(o, "summary.json"));
      f << "{\n  \"action\": " << detail::json_number(rep.action)
        << ",\n  \"xcm_accel_max\": " << detail::json_number(rep.xcm_accel_max)
        << ",\n  \"xcm_slope\": " << detail::json_number(rep.xcm_slope)
        << ",\n  \"expected_slope\": " << detail::json_number(-2.0 * q0.momentum / q0.mass)
        << ",\n  \"first_variation\": " << detail::json_number(fv)
        << ",\n  \"first_variation_analytic\": " << detail::json_number(fv_an) << "\n}\n";
    }
    out << "action=" << format_double(rep.action) << " xcm_accel_max=" << format_double(rep.xcm_accel_max)
        << " xcm_slope=" << format_double(rep.xcm_slope) << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace nlslab::cli
