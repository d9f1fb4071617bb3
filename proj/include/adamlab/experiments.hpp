#pragma once

#include "adamlab/config.hpp"
#include "adamlab/control.hpp"
#include "adamlab/ergodicity.hpp"

namespace adamlab {

// Experiment drivers shared by the CLI and the acceptance suite.

struct LimitCheckResult {
  Vec h_grid;
  Vec ks;        // max-over-coordinate KS vs the fine-step reference, per h
  Vec ks_floor;  // split-sample KS noise floor, per h
  Vec path_err;  // noiseless runs: terminal pathwise gap, per h
  Vec mean_y;    // exact_square runs: mean terminal y, per h
  bool monotone = false;                // KS strictly decreasing with margin >= 2x floor
  bool second_moment_diverges = false;  // exact-square y grows as h shrinks
};

/// Discrete ensembles over the h grid against a reference built by burning the finest
/// chain in to time delta and integrating the time-dependent system from there.
LimitCheckResult limit_check_experiment(const Objective& obj, const HyperParams& hp, const LimitCheckBlock& blk,
                                        std::uint64_t seed, int workers = 0);

struct ControlBatchResult {
  int n_total = 0;
  int n_success = 0;
  double max_analytic_error = 0.0;
  double max_replay_error = 0.0;
  double max_excursion = 0.0;
  RegularPointCertificate certificate;
  PlanGeometry geometry;
  std::vector<ControlPlan> plans;
  double success_rate() const { return n_total ? static_cast<double>(n_success) / n_total : 0.0; }
};

/// Random (start in W', target in W'') pairs through plan_full over a certified ball.
ControlBatchResult control_batch(const Objective& obj, const HyperParams& hp, const ControlBlock& blk,
                                 std::uint64_t seed, bool keep_plans = false);

State sample_start_in_wprime(const PlanGeometry& geom, const HyperParams& hp, SequentialRng& rng);
State sample_target_in_wsecond(const PlanGeometry& geom, SequentialRng& rng);

}  // namespace adamlab
