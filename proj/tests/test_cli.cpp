#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "adamlab/io.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using adamlab::json;

TEST_SUITE_BEGIN("cli");

namespace {

#ifndef ADAMLAB_CLI_PATH
#define ADAMLAB_CLI_PATH "./adamlab"
#endif

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(ADAMLAB_CLI_PATH) + " " + args + " 2>&1";
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf;
  while (fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("adamlab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

json simulate_config() {
  return json{{"version", "1"},
              {"seed", 42},
              {"objective", {{"kind", "quadratic"}, {"dim", 1}}},
              {"hp", {{"a", 1.0}, {"b", 1.0}, {"gamma", 1.0}, {"sigma", 1.0}, {"eps", 0.5}}},
              {"discrete",
               {{"h", 0.01},
                {"steps", 10},
                {"noise_mode", "closure"},
                {"init", {{"x", {1.0}}, {"z", {0.0}}, {"y", {0.5}}}}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

long line_count(const std::string& text) {
  long n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("simulate writes a trace with K+1 rows and a manifest") {
  const auto dir = scratch_dir("simulate");
  const auto cfg = write_config(dir, simulate_config());
  const auto res = run_cli("simulate --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const std::string trace = slurp(dir / "out" / "discrete_trace.csv");
  CHECK(line_count(trace) == 12);  // header + 11 states
  CHECK(trace.rfind("t,x_1,z_1,y_1", 0) == 0);
  const json manifest = json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["seed"] == 42);
}

TEST_CASE("simulate also writes SDE traces with clamp statistics") {
  const auto dir = scratch_dir("sde_trace");
  json j = simulate_config();
  j.erase("discrete");
  j["sde"] = {{"system", "inhomogeneous"},
              {"integrator", "exp_y"},
              {"dt", 0.01},
              {"horizon", 0.5},
              {"delta_start", 0.05},
              {"init", {{"x", {1.0}}, {"z", {0.0}}, {"y", {0.5}}}}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("simulate --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const std::string trace = slurp(dir / "out" / "sde_trace.csv");
  CHECK(line_count(trace) == 52);  // header + initial + 50 steps
  CHECK(trace.rfind("t,x_1,z_1,y_1", 0) == 0);
  CHECK(trace.find("0.05,") != std::string::npos);  // clock starts at delta_start
  const json stats = json::parse(slurp(dir / "out" / "sde_stats.json"));
  CHECK(stats["clamp_count"] == 0);
}

TEST_CASE("same config twice gives byte-identical traces, independent of workers") {
  const auto dir = scratch_dir("repro");
  const auto cfg = write_config(dir, simulate_config());
  CHECK(run_cli("simulate --config " + cfg.string() + " --out " + (dir / "a").string() + " --workers 1").exit_code == 0);
  CHECK(run_cli("simulate --config " + cfg.string() + " --out " + (dir / "b").string() + " --workers 4").exit_code == 0);
  CHECK(slurp(dir / "a" / "discrete_trace.csv") == slurp(dir / "b" / "discrete_trace.csv"));
}

TEST_CASE("missing hp.a yields exit code 2 naming the key") {
  const auto dir = scratch_dir("badcfg");
  json j = simulate_config();
  j["hp"].erase("a");
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("simulate --config " + cfg.string() + " --out " + (dir / "out").string());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("hp.a") != std::string::npos);
}

TEST_CASE("unknown config keys are a config error") {
  const auto dir = scratch_dir("unknown");
  json j = simulate_config();
  j["surprise"] = 1;
  const auto cfg = write_config(dir, j);
  CHECK(run_cli("simulate --config " + cfg.string() + " --out " + (dir / "out").string()).exit_code == 2);
}

TEST_CASE("seed flag overrides the config seed") {
  const auto dir = scratch_dir("seed");
  const auto cfg = write_config(dir, simulate_config());
  CHECK(run_cli("simulate --config " + cfg.string() + " --seed 7 --out " + (dir / "a").string()).exit_code == 0);
  CHECK(run_cli("simulate --config " + cfg.string() + " --seed 8 --out " + (dir / "b").string()).exit_code == 0);
  CHECK(slurp(dir / "a" / "discrete_trace.csv") != slurp(dir / "b" / "discrete_trace.csv"));
  const json manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["seed"] == 7);
}

TEST_CASE("degeneracy-map flips class around x = 0 for the 1-d quadratic") {
  const auto dir = scratch_dir("degmap");
  json j = simulate_config();
  j.erase("discrete");
  j["degeneracy"] = {{"box_radius", 1.0}, {"grid", 11}, {"margin", 0.05}, {"n_tries", 200}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("degeneracy-map --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const std::string map = slurp(dir / "out" / "degeneracy_map.csv");
  // the grid contains x = 0 (row_degenerate) and the endpoints (regular)
  CHECK(map.find("row_degenerate") != std::string::npos);
  CHECK(map.find("regular") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "regular_point.json"));
}

TEST_CASE("brackets-check passes on the quadratic") {
  const auto dir = scratch_dir("brackets");
  json j = simulate_config();
  j.erase("discrete");
  j["objective"] = {{"kind", "quadratic"}, {"dim", 2}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("brackets-check --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const json rep = json::parse(slurp(dir / "out" / "brackets_check.json"));
  CHECK(rep["max_relative_error"].get<double>() <= 1e-6);
}

TEST_CASE("limit-check: exact_square mode flags the second-moment divergence") {
  const auto dir = scratch_dir("limit_exact");
  json j = simulate_config();
  j.erase("discrete");
  j["limit_check"] = {{"h_grid", {0.2, 0.1, 0.05}},
                      {"h_ref", 0.01},
                      {"n", 2000},
                      {"horizon", 2.0},
                      {"delta", 0.1},
                      {"noise_mode", "exact_square"},
                      {"init", {{"x", {1.0}}, {"z", {0.0}}, {"y", {1.0}}}}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("limit-check --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const json rep = json::parse(slurp(dir / "out" / "limit_check.json"));
  CHECK(rep["second_moment_diverges"] == true);
  const auto means = rep["mean_terminal_y"].get<std::vector<double>>();
  CHECK(means.back() > means.front());  // y grows as h shrinks
}

TEST_CASE("limit-check: noiseless mode reports decreasing pathwise error") {
  const auto dir = scratch_dir("limit_noiseless");
  json j = simulate_config();
  j.erase("discrete");
  j["limit_check"] = {{"h_grid", {0.2, 0.1, 0.05}},
                      {"h_ref", 0.001},
                      {"n", 1},
                      {"horizon", 2.0},
                      {"delta", 0.1},
                      {"noise_mode", "noiseless"},
                      {"init", {{"x", {2.0}}, {"z", {0.0}}, {"y", {1.0}}}}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("limit-check --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const json rep = json::parse(slurp(dir / "out" / "limit_check.json"));
  const auto errs = rep["path_err"].get<std::vector<double>>();
  CHECK(errs[0] > errs[1]);
  CHECK(errs[1] > errs[2]);
}

TEST_CASE("control-solve runs a small batch to full success") {
  const auto dir = scratch_dir("control");
  json j = simulate_config();
  j.erase("discrete");
  j["objective"] = {{"kind", "quadratic"}, {"dim", 2}};
  j["control"] = {{"n_plans", 2}, {"tol", 1e-4}, {"box_radius", 2.0}, {"n_tries", 300}, {"margin", 0.05}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("control-solve --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const json rep = json::parse(slurp(dir / "out" / "control_batch.json"));
  CHECK(rep["success_rate"] == 1.0);
  CHECK(fs::exists(dir / "out" / "plan_0.json"));
  const std::string csv = slurp(dir / "out" / "control_0.csv");
  CHECK(csv.rfind("t,h_1,h_2", 0) == 0);
}

TEST_CASE("ergodicity-run produces a decaying curve and holds the truncation bound") {
  const auto dir = scratch_dir("ergo");
  json j = simulate_config();
  j.erase("discrete");
  j["ergodicity"] = {{"n", 3000},
                     {"checkpoints", {0.7, 2.0, 4.0, 8.0, 16.0}},
                     {"n_projections", 32},
                     {"point_start", {{"x", {5.0}}, {"z", {0.0}}, {"y", {1.0}}}},
                     {"cloud_sd", 2.0},
                     {"truncation_R", {1.0, 5.0}}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("ergodicity-run --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const json fit = json::parse(slurp(dir / "out" / "convergence_fit.json"));
  CHECK(fit["lambda_hat"].get<double>() > 0.0);
  const json trunc = json::parse(slurp(dir / "out" / "truncation.json"));
  for (const auto& row : trunc) CHECK(row["holds"] == true);
  const std::string curve = slurp(dir / "out" / "convergence.csv");
  CHECK(curve.rfind("t,distance,stderr", 0) == 0);
  CHECK(fs::exists(dir / "out" / "residuals.json"));
  // terminal ensemble is exported with its column manifest
  const std::string ens = slurp(dir / "out" / "terminal_ensemble.csv");
  CHECK(ens.rfind("x_1,z_1,y_1", 0) == 0);
  CHECK(line_count(ens) == 3001);
  const json man = json::parse(slurp(dir / "out" / "terminal_ensemble.manifest.json"));
  CHECK(man["columns"].size() == 3);
  CHECK(man["version"] == "1");
}

TEST_CASE("a failed check exits with code 4") {
  // reversing the h grid makes the KS sequence increase, failing the monotone verdict
  const auto dir = scratch_dir("limit_fail");
  json j = simulate_config();
  j.erase("discrete");
  j["limit_check"] = {{"h_grid", {0.025, 0.05, 0.1}},
                      {"h_ref", 1.0 / 160.0},
                      {"n", 4000},
                      {"horizon", 2.0},
                      {"delta", 0.1},
                      {"noise_mode", "closure"},
                      {"init", {{"x", {1.0}}, {"z", {0.0}}, {"y", {1.0}}}}};
  j["hp"] = {{"a", 9.5}, {"b", 2.0}, {"gamma", 1.0}, {"sigma", 1.0}, {"eps", 0.5}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("limit-check --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 4);
}

TEST_CASE("lyapunov-check reports zero violations on defaults") {
  const auto dir = scratch_dir("lyap");
  json j = simulate_config();
  j.erase("discrete");
  j["lyapunov"] = {{"n", 20000}};
  const auto cfg = write_config(dir, j);
  const auto res = run_cli("lyapunov-check --config " + cfg.string() + " --out " + (dir / "out").string());
  INFO(res.output);
  CHECK(res.exit_code == 0);
  const json rep = json::parse(slurp(dir / "out" / "drift_report.json"));
  for (const auto& combo : rep) CHECK(combo["violation_count"] == 0);
}

TEST_SUITE_END();
