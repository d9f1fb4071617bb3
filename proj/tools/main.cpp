#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "adamlab/degeneracy.hpp"
#include "adamlab/experiments.hpp"
#include "adamlab/io.hpp"
#include "adamlab/lyapunov.hpp"

namespace fs = std::filesystem;
using namespace adamlab;

namespace {

constexpr const char* kVersion = "adamlab 0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitCheckFailure = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--workers", args.workers, "worker cap (default: all cores)");
}

ExperimentConfig load(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

void write_manifest(const CommonArgs& args, const ExperimentConfig& cfg, const std::string& command) {
  const json cfg_json = to_json(cfg);
  json manifest;
  manifest["tool"] = kVersion;
  manifest["command"] = command;
  manifest["seed"] = cfg.seed;
  manifest["workers"] = resolve_workers(args.workers);
  manifest["config_hash"] = config_hash(cfg_json);
  manifest["config"] = cfg_json;
  write_text(fs::path(args.out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

int cmd_simulate(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  if (!cfg.discrete && !cfg.sde) throw ConfigError("simulate needs a \"discrete\" and/or \"sde\" block");
  write_manifest(args, cfg, "simulate");
  const auto obj = cfg.make_objective();

  if (cfg.discrete) {
    DiscreteParams dp;
    dp.h = cfg.discrete->h;
    dp.steps = cfg.discrete->steps;
    dp.noise_mode = cfg.discrete->noise_mode;
    dp.init = cfg.discrete->init;
    dp.seed = cfg.seed;
    const auto trace = run_discrete(*obj, cfg.hp, dp);
    write_trace_csv(fs::path(args.out_dir) / "discrete_trace.csv", trace.times, trace.states);
  }
  if (cfg.sde) {
    SdeConfig sc;
    sc.system = cfg.sde->system;
    sc.integrator = cfg.sde->integrator;
    sc.dt = cfg.sde->dt;
    sc.horizon = cfg.sde->horizon;
    sc.delta_start = cfg.sde->delta_start;
    sc.seed = cfg.seed;
    sc.keep_path = true;
    const auto traj = simulate(sc, *obj, cfg.hp, cfg.sde->init);
    write_trace_csv(fs::path(args.out_dir) / "sde_trace.csv", traj.times, traj.states);
    json extra{{"clamp_count", traj.clamp_count}};
    write_text(fs::path(args.out_dir) / "sde_stats.json", extra.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_limit_check(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  if (!cfg.limit_check) throw ConfigError("limit-check needs a \"limit_check\" block");
  write_manifest(args, cfg, "limit-check");
  const auto obj = cfg.make_objective();
  const auto res = limit_check_experiment(*obj, cfg.hp, *cfg.limit_check, cfg.seed, args.workers);

  json rep;
  rep["h_grid"] = res.h_grid;
  rep["ks"] = res.ks;
  rep["ks_floor"] = res.ks_floor;
  rep["path_err"] = res.path_err;
  rep["mean_terminal_y"] = res.mean_y;
  rep["monotone"] = res.monotone;
  rep["second_moment_diverges"] = res.second_moment_diverges;
  write_text(fs::path(args.out_dir) / "limit_check.json", rep.dump(2) + "\n");
  for (std::size_t i = 0; i < res.h_grid.size(); ++i) {
    std::printf("h=%-8g", res.h_grid[i]);
    if (!res.ks.empty()) std::printf(" ks=%.5f (floor %.5f)", res.ks[i], res.ks_floor[i]);
    if (!res.path_err.empty()) std::printf(" path_err=%.3e", res.path_err[i]);
    if (!res.mean_y.empty()) std::printf(" mean_y=%.4g", res.mean_y[i]);
    std::printf("\n");
  }
  if (cfg.limit_check->noise_mode == NoiseMode::exact_square) {
    std::printf("second-moment divergence with h: %s\n", res.second_moment_diverges ? "yes" : "no");
    return res.second_moment_diverges ? kExitOk : kExitCheckFailure;
  }
  std::printf("monotone improvement: %s\n", res.monotone ? "yes" : "no");
  return res.monotone ? kExitOk : kExitCheckFailure;
}

int cmd_lyapunov_check(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  const LyapunovBlock blk = cfg.lyapunov.value_or(LyapunovBlock{});
  write_manifest(args, cfg, "lyapunov-check");
  const auto obj = cfg.make_objective();

  LyapunovParams base = select_params(*obj, cfg.hp, blk.safety, blk.box_radius,
                                      blk.eta < 0.0 ? 0.5 * sq(cfg.hp.sigma) : blk.eta, cfg.seed + 1);
  const double eta = blk.eta < 0.0 ? 0.5 * sq(cfg.hp.sigma) : blk.eta;
  long total_violations = 0;
  json combos = json::array();
  for (double u : blk.upsilons) {
    LyapunovParams p = base;
    p.upsilon = u;
    for (double er : {0.0, u}) {
      DriftSampler sampler{blk.box_radius, blk.n, cfg.seed + 7};
      const auto rep = drift_check(p, *obj, cfg.hp, sampler, eta, er, args.workers);
      total_violations += rep.violation_count;
      json entry = drift_report_json(rep, p);
      entry["upsilon"] = u;
      entry["eps_reg"] = er;
      combos.push_back(entry);
      std::printf("upsilon=%g eps_reg=%g: %ld violations over %ld samples\n", u, er, rep.violation_count, rep.n);
      if (er == u) break;  // avoid duplicating the (0, 0) combo
    }
  }
  write_text(fs::path(args.out_dir) / "drift_report.json", combos.dump(2) + "\n");
  return total_violations == 0 ? kExitOk : kExitCheckFailure;
}

int cmd_degeneracy_map(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  const DegeneracyBlock blk = cfg.degeneracy.value_or(DegeneracyBlock{});
  write_manifest(args, cfg, "degeneracy-map");
  const auto obj = cfg.make_objective();
  const int m = obj->dim();
  if (m > 2) throw ConfigError("degeneracy-map supports m <= 2");

  std::string csv = "x_1" + std::string(m == 2 ? ",x_2" : "") + ",min_row_norm,abs_det,class\n";
  auto cls_name = [](DegenClass c) {
    return c == DegenClass::regular ? "regular" : c == DegenClass::row_degenerate ? "row_degenerate" : "rank_degenerate";
  };
  Vec x(m);
  const int g = blk.grid;
  for (int i = 0; i < g; ++i) {
    x[0] = -blk.box_radius + 2.0 * blk.box_radius * i / (g - 1);
    for (int j = 0; j < (m == 2 ? g : 1); ++j) {
      if (m == 2) x[1] = -blk.box_radius + 2.0 * blk.box_radius * j / (g - 1);
      const auto rep = classify(x, *obj, blk.tol_row, blk.tol_det);
      csv += format_double(x[0]);
      if (m == 2) csv += "," + format_double(x[1]);
      csv += "," + format_double(rep.min_row_norm) + "," + format_double(rep.abs_det) + "," + cls_name(rep.cls) + "\n";
    }
  }
  write_text(fs::path(args.out_dir) / "degeneracy_map.csv", csv);

  const auto cert = find_regular_point(*obj, blk.box_radius, blk.n_tries, blk.margin, cfg.seed);
  write_text(fs::path(args.out_dir) / "regular_point.json", certificate_json(cert).dump(2) + "\n");
  std::printf("regular point found; |det A| >= %g on the certified ball\n", cert.grid_min);
  return kExitOk;
}

int cmd_brackets_check(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  write_manifest(args, cfg, "brackets-check");
  const auto obj = cfg.make_objective();
  const int m = obj->dim();

  SequentialRng rng(cfg.seed, 0xb2acu);
  double worst = 0.0;
  const int n_states = 20;
  Vec closed, numeric;
  for (int t = 0; t < n_states; ++t) {
    State s(m);
    for (int i = 0; i < m; ++i) {
      s.x[i] = rng.uniform(-2.0, 2.0);
      s.z[i] = rng.uniform(-2.0, 2.0);
      s.y[i] = rng.uniform(0.3, 3.0);
    }
    for (int order = 1; order <= 2; ++order)
      for (int i = 0; i < m; ++i) {
        lie_bracket_closed_form(order, i, s, *obj, cfg.hp, closed);
        if (order == 1)
          numeric_commutator(drift_field(obj, cfg.hp), diffusion_field(i, m, cfg.hp), s, numeric);
        else
          numeric_commutator(bracket_field(1, i, obj, cfg.hp), drift_field(obj, cfg.hp), s, numeric);
        double num = 0.0, den = 0.0;
        for (int c = 0; c < 3 * m; ++c) {
          num += sq(closed[c] - numeric[c]);
          den += sq(closed[c]);
        }
        worst = std::max(worst, std::sqrt(num) / (1.0 + std::sqrt(den)));
      }
  }
  json rep{{"states", n_states}, {"max_relative_error", worst}, {"tolerance", 1e-6}};
  write_text(fs::path(args.out_dir) / "brackets_check.json", rep.dump(2) + "\n");
  std::printf("bracket oracle max relative error: %.3e\n", worst);
  return worst <= 1e-6 ? kExitOk : kExitCheckFailure;
}

int cmd_control_solve(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  const ControlBlock blk = cfg.control.value_or(ControlBlock{});
  write_manifest(args, cfg, "control-solve");
  const auto obj = cfg.make_objective();

  const auto res = control_batch(*obj, cfg.hp, blk, cfg.seed, /*keep_plans=*/true);
  json rep;
  rep["n_total"] = res.n_total;
  rep["n_success"] = res.n_success;
  rep["success_rate"] = res.success_rate();
  rep["max_analytic_error"] = res.max_analytic_error;
  rep["max_replay_error"] = res.max_replay_error;
  rep["max_excursion"] = res.max_excursion;
  rep["certificate"] = certificate_json(res.certificate);
  write_text(fs::path(args.out_dir) / "control_batch.json", rep.dump(2) + "\n");
  if (!res.plans.empty()) {
    write_text(fs::path(args.out_dir) / "plan_0.json", ::adamlab::plan_json(res.plans.front()).dump(2) + "\n");
    write_control_csv(fs::path(args.out_dir) / "control_0.csv", res.plans.front().control);
  }
  std::printf("plans: %d/%d succeeded (max analytic err %.2e, max replay err %.2e)\n", res.n_success, res.n_total,
              res.max_analytic_error, res.max_replay_error);
  return res.n_success == res.n_total ? kExitOk : kExitCheckFailure;
}

int cmd_ergodicity_run(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  if (!cfg.ergodicity) throw ConfigError("ergodicity-run needs an \"ergodicity\" block");
  const ErgodicityBlock& blk = *cfg.ergodicity;
  write_manifest(args, cfg, "ergodicity-run");
  const auto obj = cfg.make_objective();

  SdeConfig sc;
  sc.dt = 0.01;
  sc.seed = cfg.seed;
  const State center = blk.point_start;
  const auto curve = convergence_study(sc, *obj, cfg.hp, point_init(blk.point_start),
                                       gaussian_init(center, blk.cloud_sd, blk.cloud_sd, blk.cloud_sd, cfg.seed + 3),
                                       blk.n, blk.checkpoints, blk.n_projections, args.workers,
                                       /*keep_ensembles=*/true);
  write_convergence_csv(fs::path(args.out_dir) / "convergence.csv", curve);
  write_text(fs::path(args.out_dir) / "convergence_fit.json", convergence_fit_json(curve).dump(2) + "\n");

  // truncation inequality at the first and last checkpoints
  json trunc = json::array();
  for (std::size_t c : {std::size_t{0}, curve.ensembles_a.size() - 1}) {
    for (const auto& row :
         truncation_inequality_check(curve.ensembles_a[c], curve.ensembles_b[c], blk.truncation_R)) {
      trunc.push_back(json{{"t", curve.times[c]},
                           {"R", row.R},
                           {"lhs_sq", row.lhs_sq},
                           {"tv", row.tv},
                           {"tail_mu", row.tail_mu},
                           {"tail_nu", row.tail_nu},
                           {"margin", row.margin},
                           {"holds", row.holds}});
      if (!row.holds) {
        write_text(fs::path(args.out_dir) / "truncation.json", trunc.dump(2) + "\n");
        std::printf("truncation inequality violated at t=%g, R=%g\n", curve.times[c], row.R);
        return kExitCheckFailure;
      }
    }
  }
  write_text(fs::path(args.out_dir) / "truncation.json", trunc.dump(2) + "\n");

  // stationarity residuals on the terminal point-start ensemble, which is also
  // exported with its column manifest
  const auto phis = standard_phi_set(obj->dim());
  auto terminal = curve.ensembles_a.back();
  terminal.provenance = config_hash(to_json(cfg));
  const auto residuals = stationarity_residual(phis, terminal, *obj, cfg.hp, args.workers);
  write_text(fs::path(args.out_dir) / "residuals.json", residual_report_json(residuals).dump(2) + "\n");
  write_ensemble_csv(fs::path(args.out_dir) / "terminal_ensemble.csv", terminal);

  std::printf("lambda_hat=%.4f r2=%.3f final distance=%.4g (floor %.4g)\n", curve.lambda_hat, curve.r2,
              curve.distances.back(), curve.noise_floor);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for continuous-time models of bias-corrected adaptive optimizers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const CommonArgs&) = nullptr;

  auto wire = [&](const char* name, const char* desc, int (*fn)(const CommonArgs&)) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    add_common(cmd, args);
    cmd->callback([&handler, fn] { handler = fn; });
  };
  wire("simulate", "run discrete and/or SDE simulations, write traces", cmd_simulate);
  wire("limit-check", "discrete ensembles vs fine-step reference over an h grid", cmd_limit_check);
  wire("lyapunov-check", "recipe-selected drift certificate over a sampled slab", cmd_lyapunov_check);
  wire("degeneracy-map", "grid map of A(x) degeneracy plus a regular-point certificate", cmd_degeneracy_map);
  wire("brackets-check", "closed-form Lie brackets vs finite-difference commutators", cmd_brackets_check);
  wire("control-solve", "batch of three-stage control plans over a certified ball", cmd_control_solve);
  wire("ergodicity-run", "two-start convergence study with truncation-inequality checks", cmd_ergodicity_run);

  try {
    app.parse(argc, argv);
    return handler ? handler(args) : kExitConfig;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "numeric divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
