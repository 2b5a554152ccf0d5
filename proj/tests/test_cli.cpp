#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"
#include "nlslab/commands.hpp"

using namespace nlslab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("nlslab_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_json(const std::string& name, const nlohmann::json& j) {
    const auto p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  Outcome cli(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + NLSLAB_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(out), slurp(err)};
  }

  fs::path dir_;
};

nlohmann::json plane_wave_config() {
  return {{"grid", {{"n", 32}, {"length", 2 * std::numbers::pi}}},
          {"params", {{"sigma", 1}, {"lambda", 1.0}, {"p", 3}}},
          {"initial", {{"type", "plane_wave"}, {"A", 1.0}, {"k_index", 2}}},
          {"solver", {{"dt", 0.01}, {"t_end", 0.5}, {"integrator", "strang"}}},
          {"outputs", {{"record_every", 5}}}};
}

nlohmann::json soliton_config(const std::string& integrator, double dt) {
  return {{"grid", {{"n", 128}, {"length", 40.0}}},
          {"params", {{"sigma", -1}, {"lambda", 1.0}, {"p", 3}}},
          {"initial", {{"type", "soliton"}, {"a", 1.0}, {"x0", 0.0}}},
          {"solver", {{"dt", dt}, {"t_end", 1.0}, {"integrator", integrator}}}};
}

double fitted_order_from(const std::string& out) {
  const auto pos = out.find("fitted_order=");
  if (pos == std::string::npos) return NAN;
  return std::stod(out.substr(pos + 13));
}

}  // namespace

TEST_F(CliTest, RunPlaneWaveHasConstantMass) {
  const auto cfg = write_json("pw.json", plane_wave_config());
  const auto r = cli("run --config \"" + cfg.string() + "\" --out \"" + (dir_ / "out").string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream f(dir_ / "out" / "diagnostics.csv");
  const auto rows = read_diagnostics(f);
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_DOUBLE_EQ(rows.back().t, 0.5);
  for (const auto& q : rows) EXPECT_NEAR(q.mass, 2 * std::numbers::pi, 1e-12);
}

TEST_F(CliTest, RunDumpsFieldSnapshots) {
  auto j = plane_wave_config();
  j["outputs"]["fields_dir"] = "snaps";
  const auto cfg = write_json("pw.json", j);
  const auto r = cli("run --dump-fields --config \"" + cfg.string() + "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto last = read_field_snapshot((dir_ / "snaps" / "u_000010.csv").string());
  const auto exact = plane_wave(1.0, 2, last.grid(), NlsParams{1, 1.0, 3}, 0.5);
  EXPECT_LT(max_abs_diff(last, exact), 1e-12);
}

TEST_F(CliTest, FileInitialDataRoundTrip) {
  const Grid1D g(128, 20.0);
  write_field_snapshot((dir_ / "u0.csv").string(), gaussian_packet(1.0, 0.0, 1.0, 1.0, g));
  auto j = plane_wave_config();
  j["grid"] = {{"n", 128}, {"length", 20.0}};
  j["initial"] = {{"type", "file"}, {"path", "u0.csv"}};
  const auto cfg = write_json("file.json", j);
  const auto r = cli("run --config \"" + cfg.string() + "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream f(dir_ / "diagnostics.csv");
  EXPECT_NEAR(read_diagnostics(f).front().mass, std::sqrt(std::numbers::pi), 1e-12);
}

TEST_F(CliTest, BadGridSizeIsConfigError) {
  auto j = plane_wave_config();
  j["grid"]["n"] = 6;
  const auto cfg = write_json("bad.json", j);
  const auto r = cli("run --config \"" + cfg.string() + "\" --out \"" + dir_.string() + "\"");
  EXPECT_EQ(r.code, 2);
  const auto line = nlohmann::json::parse(r.err);
  EXPECT_EQ(line["error"], "config");
  EXPECT_EQ(line["key"], "grid.n");
}

TEST_F(CliTest, UnknownAndMissingKeysAreConfigErrors) {
  auto j = plane_wave_config();
  j["solver"]["tolerance"] = 1e-3;
  auto r = cli("run --config \"" + write_json("a.json", j).string() + "\" --out \"" + dir_.string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err)["key"], "solver.tolerance");

  j = plane_wave_config();
  j["params"].erase("sigma");
  r = cli("run --config \"" + write_json("b.json", j).string() + "\" --out \"" + dir_.string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err)["key"], "params.sigma");

  r = cli("run --config \"" + (dir_ / "missing.json").string() + "\"");
  EXPECT_EQ(r.code, 2);
  r = cli("frobnicate");
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, BlowUpIsSolverAbort) {
  nlohmann::json j = {{"grid", {{"n", 64}, {"length", 20.0}}},
                      {"params", {{"sigma", -1}, {"lambda", 1.0}, {"p", 3}}},
                      {"initial", {{"type", "soliton"}, {"a", 1e160}, {"x0", 0.0}}},
                      {"solver", {{"dt", 0.5}, {"t_end", 2.0}, {"integrator", "strang"}}}};
  const auto r = cli("run --config \"" + write_json("boom.json", j).string() + "\" --out \"" + dir_.string() + "\"");
  EXPECT_EQ(r.code, 3);
  const auto line = nlohmann::json::parse(r.err.substr(r.err.find('{')));
  EXPECT_EQ(line["error"], "solver");
  EXPECT_EQ(line["last_good_time"].get<double>(), 0.0);
}

TEST_F(CliTest, SmoothingIsByteDeterministic) {
  nlohmann::json j = {{"grid", {{"n", 512}, {"length", 40.0}}},
                      {"params", {{"sigma", 1}, {"lambda", 1.0}, {"p", 3}}},
                      {"solver", {{"dt", 5e-3}, {"t_end", 0.5}, {"integrator", "strang"}}}};
  nlohmann::json e = {{"family", "gaussian_grid_scan"},
                      {"count", 5},
                      {"seed", 42},
                      {"A", {0.5, 2.0}},
                      {"w", {0.5, 2.0}},
                      {"k0", {-4.0, 4.0}},
                      {"x0", {-5.0, 5.0}}};
  const auto cfg = write_json("cfg.json", j), ens = write_json("ens.json", e);
  const std::string base = "smoothing --config \"" + cfg.string() + "\" --ensemble \"" + ens.string() + "\" --x0 0.5";
  const auto r1 = cli(base + " --out \"" + (dir_ / "a").string() + "\"");
  ASSERT_EQ(r1.code, 0) << r1.err;
  setenv("NLSLAB_THREADS", "3", 1);
  const auto r3 = cli(base + " --out \"" + (dir_ / "b").string() + "\"");
  unsetenv("NLSLAB_THREADS");
  ASSERT_EQ(r3.code, 0) << r3.err;
  for (const char* name : {"smoothing_ensemble.csv", "smoothing_ensemble_linear.csv", "summary.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / name), slurp(dir_ / "b" / name)) << name;
  }
  const auto summary = nlohmann::json::parse(slurp(dir_ / "a" / "summary.json"));
  EXPECT_EQ(summary["members"], 5);
  EXPECT_EQ(summary["seed"], 42);
  EXPECT_TRUE(summary["poincare_all_hold"].get<bool>());
  EXPECT_GT(summary["empirical_constant"].get<double>(), 0.0);
  std::ifstream f(dir_ / "a" / "smoothing_ensemble.csv");
  EXPECT_EQ(read_ensemble_csv(f).size(), 5u);

  const auto r4 = cli(base + " --seed 43 --out \"" + (dir_ / "c").string() + "\"");
  ASSERT_EQ(r4.code, 0);
  EXPECT_NE(slurp(dir_ / "a" / "smoothing_ensemble.csv"), slurp(dir_ / "c" / "smoothing_ensemble.csv"));
}

TEST_F(CliTest, ConvergenceOrders) {
  const auto s = cli("convergence --halvings 3 --config \"" + write_json("s.json", soliton_config("strang", 8e-3)).string() +
                     "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(s.code, 0) << s.err;
  const double strang_order = fitted_order_from(s.out);
  EXPECT_GE(strang_order, 1.8);
  EXPECT_LE(strang_order, 2.2);
  EXPECT_EQ(slurp(dir_ / "convergence.csv").substr(0, 21), "dt,diff_to_next,order");

  const auto r = cli("convergence --halvings 3 --config \"" + write_json("r.json", soliton_config("rk4", 8e-3)).string() +
                     "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const double rk4_order = fitted_order_from(r.out);
  EXPECT_GE(rk4_order, 3.6);
  EXPECT_LE(rk4_order, 4.4);

  const auto bad = cli("convergence --halvings 1 --config \"" + (dir_ / "s.json").string() + "\" --out \"" +
                       dir_.string() + "\"");
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliTest, VariationalOutputs) {
  nlohmann::json j = {{"grid", {{"n", 512}, {"length", 80.0}}},
                      {"params", {{"sigma", -1}, {"lambda", 1.0}, {"p", 3}}},
                      {"initial", {{"type", "gaussian"}, {"A", 1.0}, {"x0", 0.0}, {"k0", 1.0}, {"w", 1.0}}},
                      {"solver", {{"dt", 1e-3}, {"t_end", 1.0}, {"integrator", "strang"}}},
                      {"outputs", {{"record_every", 10}}}};
  const auto r = cli("variational --config \"" + write_json("v.json", j).string() + "\" --out \"" + dir_.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = nlohmann::json::parse(slurp(dir_ / "summary.json"));
  EXPECT_LE(summary["xcm_accel_max"].get<double>(), 1e-6);
  EXPECT_NEAR(summary["xcm_slope"].get<double>(), summary["expected_slope"].get<double>(), 1e-4);
  EXPECT_TRUE(std::isfinite(summary["action"].get<double>()));
  const double fv = summary["first_variation"].get<double>();
  const double fa = summary["first_variation_analytic"].get<double>();
  EXPECT_LE(std::abs(fv - fa), 1e-6 * std::abs(fa));
  std::ifstream f(dir_ / "variational.csv");
  EXPECT_EQ(read_variational_csv(f).size(), 101u);
}

TEST(VerifyMutation, PhaseFlipBreaksEnergyOrderOnly) {
  verify::Options opts;
  opts.flip_nonlinear_phase = true;
  opts.only = {"mass_conservation", "energy_order"};
  const auto res = verify::run_suite(opts);
  ASSERT_EQ(res.checks.size(), 2u);
  for (const auto& c : res.checks) {
    if (c.name == "mass_conservation") {
      EXPECT_TRUE(c.pass) << c.detail;
    } else {
      EXPECT_EQ(c.name, "energy_order");
      EXPECT_FALSE(c.pass) << c.detail;
    }
  }
  EXPECT_FALSE(res.all_pass());
}

TEST(Commands, ThreadsFromEnvironment) {
  setenv("NLSLAB_THREADS", "4", 1);
  EXPECT_EQ(cli::threads_from_env(), 4u);
  setenv("NLSLAB_THREADS", "zero", 1);
  EXPECT_EQ(cli::threads_from_env(), 0u);
  unsetenv("NLSLAB_THREADS");
  EXPECT_EQ(cli::threads_from_env(), 0u);
}
