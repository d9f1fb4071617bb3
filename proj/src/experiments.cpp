#include "adamlab/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "adamlab/stats.hpp"

namespace adamlab {

namespace {

// max-over-coordinate KS between two ensembles; argmax reported for floor pairing
double ks_max(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int* argmax = nullptr) {
  double d = 0.0;
  for (int c = 0; c < a.row_width(); ++c) {
    const double dc = ks_distance(a.column(c), b.column(c));
    if (dc > d) {
      d = dc;
      if (argmax) *argmax = c;
    }
  }
  return d;
}

// Split-sample bootstrap of the KS estimator noise for one coordinate: KS over B
// disjoint block pairs, extrapolated to the full sample size (sd ~ 1/sqrt(n)).
double ks_floor_coord(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int coord) {
  constexpr int kBlocks = 8;
  const Vec ca = a.column(coord), cb = b.column(coord);
  const std::size_t na = ca.size() / kBlocks, nb = cb.size() / kBlocks;
  Vec blocks(kBlocks);
  for (int k = 0; k < kBlocks; ++k)
    blocks[k] = ks_distance(std::span<const double>(ca.data() + k * na, na),
                            std::span<const double>(cb.data() + k * nb, nb));
  const auto mv = mean_var(blocks);
  return std::sqrt(mv.variance / kBlocks);
}

}  // namespace

LimitCheckResult limit_check_experiment(const Objective& obj, const HyperParams& hp, const LimitCheckBlock& blk,
                                        std::uint64_t seed, int workers) {
  const int m = obj.dim();
  LimitCheckResult out;
  out.h_grid = blk.h_grid;

  if (blk.noise_mode == NoiseMode::closure) {
    // Reference: finest discrete chain to delta, then the time-dependent system from
    // delta to the horizon with the same per-trajectory noise stream.
    const long burn_steps = static_cast<long>(std::llround(blk.delta / blk.h_ref));
    DiscreteParams dp_ref;
    dp_ref.h = blk.h_ref;
    dp_ref.steps = burn_steps;
    dp_ref.noise_mode = NoiseMode::closure;
    dp_ref.init = blk.init;
    dp_ref.seed = seed;
    const EmpiricalMeasure at_delta = run_discrete_ensemble(obj, hp, dp_ref, blk.n, workers, 0);

    SdeConfig ref_cfg;
    ref_cfg.system = SystemKind::inhomogeneous;
    ref_cfg.integrator = Integrator::exp_y;
    ref_cfg.dt = blk.h_ref;
    ref_cfg.delta_start = blk.delta;
    ref_cfg.seed = seed;
    ref_cfg.horizon = blk.horizon - blk.delta;
    EmpiricalMeasure reference(blk.n, m);
    reference.time = blk.horizon;
    parallel_for(blk.n, workers, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t t = lo; t < hi; ++t) {
        const auto traj = simulate(ref_cfg, obj, hp, at_delta.state(static_cast<int>(t)),
                                   static_cast<std::uint32_t>(t), nullptr, static_cast<std::uint64_t>(burn_steps));
        reference.set_row(static_cast<int>(t), traj.terminal());
      }
    });

    for (double h : blk.h_grid) {
      DiscreteParams dp;
      dp.h = h;
      dp.steps = static_cast<long>(std::llround(blk.horizon / h));
      dp.noise_mode = NoiseMode::closure;
      dp.init = blk.init;
      dp.seed = seed + 1;  // independent of the reference stream
      const EmpiricalMeasure ens = run_discrete_ensemble(obj, hp, dp, blk.n, workers, 0);
      int coord = 0;
      out.ks.push_back(ks_max(ens, reference, &coord));
      out.ks_floor.push_back(ks_floor_coord(ens, reference, coord));
    }
    out.monotone = true;
    for (std::size_t i = 0; i + 1 < out.ks.size(); ++i) {
      const double margin = 2.0 * std::max(out.ks_floor[i], out.ks_floor[i + 1]);
      if (!(out.ks[i] - out.ks[i + 1] >= margin)) out.monotone = false;
    }
  } else if (blk.noise_mode == NoiseMode::noiseless) {
    // deterministic chains: pathwise terminal gap vs the finest chain, O(h)
    DiscreteParams dp_ref;
    dp_ref.h = blk.h_ref;
    dp_ref.steps = static_cast<long>(std::llround(blk.horizon / blk.h_ref));
    dp_ref.noise_mode = NoiseMode::noiseless;
    dp_ref.init = blk.init;
    HyperParams hp0 = hp;
    hp0.sigma = 0.0;
    const State ref = run_discrete(obj, hp0, dp_ref).terminal();
    for (double h : blk.h_grid) {
      DiscreteParams dp = dp_ref;
      dp.h = h;
      dp.steps = static_cast<long>(std::llround(blk.horizon / h));
      const State s = run_discrete(obj, hp0, dp).terminal();
      double gap = 0.0;
      for (int i = 0; i < m; ++i)
        gap = std::max({gap, std::abs(s.x[i] - ref.x[i]), std::abs(s.z[i] - ref.z[i]), std::abs(s.y[i] - ref.y[i])});
      out.path_err.push_back(gap);
    }
    out.monotone = std::is_sorted(out.path_err.rbegin(), out.path_err.rend());
  } else {
    // exact_square: the h(xi_k)^2 = sigma^2 zeta^2 term is order one per step, so the
    // terminal y grows like sigma^2/h as h shrinks
    for (double h : blk.h_grid) {
      DiscreteParams dp;
      dp.h = h;
      dp.steps = static_cast<long>(std::llround(blk.horizon / h));
      dp.noise_mode = NoiseMode::exact_square;
      dp.init = blk.init;
      dp.seed = seed;
      const int n_small = std::max(64, blk.n / 16);
      const EmpiricalMeasure ens = run_discrete_ensemble(obj, hp, dp, n_small, workers, 0);
      double mean_y = 0.0;
      for (int i = 0; i < ens.n; ++i) {
        const auto r = ens.row(i);
        for (int j = 2 * m; j < 3 * m; ++j) mean_y += r[j];
      }
      out.mean_y.push_back(mean_y / (ens.n * m));
    }
    out.second_moment_diverges = true;
    for (std::size_t i = 0; i + 1 < out.mean_y.size(); ++i)
      if (!(out.mean_y[i + 1] >= 1.5 * out.mean_y[i])) out.second_moment_diverges = false;
  }
  return out;
}

State sample_start_in_wprime(const PlanGeometry& geom, const HyperParams& hp, SequentialRng& rng) {
  const int m = static_cast<int>(geom.x_star.size());
  State s(m);
  // x in B(x_star, 0.9 r_cert), z in B(0, 0.9 rho_z), y in a band around y_star
  for (;;) {
    double r2 = 0.0;
    for (int i = 0; i < m; ++i) {
      s.x[i] = rng.uniform(-0.9 * geom.r_cert, 0.9 * geom.r_cert);
      r2 += sq(s.x[i]);
    }
    if (r2 <= sq(0.9 * geom.r_cert)) break;
  }
  for (int i = 0; i < m; ++i) s.x[i] += geom.x_star[i];
  for (;;) {
    double r2 = 0.0;
    for (int i = 0; i < m; ++i) {
      s.z[i] = rng.uniform(-0.9 * geom.rho_z, 0.9 * geom.rho_z);
      r2 += sq(s.z[i]);
    }
    if (r2 <= sq(0.9 * geom.rho_z)) break;
  }
  for (int i = 0; i < m; ++i) {
    const double band = 0.5 * std::min(1.0, geom.y_star[i]);
    s.y[i] = std::max(0.5 * sq(hp.sigma), geom.y_star[i] + rng.uniform(-band, band));
  }
  return s;
}

State sample_target_in_wsecond(const PlanGeometry& geom, SequentialRng& rng) {
  const int m = static_cast<int>(geom.x_star.size());
  State s(m);
  auto ball = [&](double radius, Vec& out) {
    for (;;) {
      double r2 = 0.0;
      for (int i = 0; i < m; ++i) {
        out[i] = rng.uniform(-radius, radius);
        r2 += sq(out[i]);
      }
      if (r2 <= sq(radius)) return;
    }
  };
  ball(0.9 * geom.rho_x, s.x);
  ball(0.9 * geom.rho_z, s.z);
  ball(0.9 * geom.rho_y, s.y);
  for (int i = 0; i < m; ++i) {
    s.x[i] += geom.x_star[i];
    s.y[i] += geom.y_star[i];
  }
  return s;
}

ControlBatchResult control_batch(const Objective& obj, const HyperParams& hp, const ControlBlock& blk,
                                 std::uint64_t seed, bool keep_plans) {
  ControlBatchResult out;
  out.certificate = find_regular_point(obj, blk.box_radius, blk.n_tries, blk.margin, seed);
  out.geometry = plan_geometry(out.certificate, obj, hp);

  SequentialRng rng(seed, 0xc0defu);
  ControlSchedule schedule;
  schedule.dt = blk.dt;
  out.n_total = blk.n_plans;
  for (int k = 0; k < blk.n_plans; ++k) {
    const State u0 = sample_start_in_wprime(out.geometry, hp, rng);
    const State target = sample_target_in_wsecond(out.geometry, rng);
    ControlPlan plan = plan_full(u0, target, obj, hp, out.geometry, schedule, blk.tol);
    out.max_analytic_error = std::max(out.max_analytic_error, plan.analytic_error);
    out.max_replay_error = std::max(out.max_replay_error, plan.replay_error);
    out.max_excursion = std::max(out.max_excursion, plan.max_excursion);
    if (plan.success) ++out.n_success;
    if (keep_plans) out.plans.push_back(std::move(plan));
  }
  return out;
}

}  // namespace adamlab
