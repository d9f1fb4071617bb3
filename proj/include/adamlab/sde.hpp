#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/common.hpp"
#include "adamlab/measure.hpp"
#include "adamlab/objective.hpp"

namespace adamlab {

enum class SystemKind { inhomogeneous, homogeneous };
enum class Integrator { euler_maruyama, exp_y };

struct SdeConfig {
  SystemKind system = SystemKind::homogeneous;
  Integrator integrator = Integrator::exp_y;
  double dt = 0.01;
  double horizon = 1.0;       // integration length, in model time
  double delta_start = 0.01;  // inhomogeneous start time (the system is singular at t = 0)
  std::uint64_t seed = 0;
  bool keep_path = false;
  bool keep_increments = false;

  void validate() const;
  double start_time() const { return system == SystemKind::inhomogeneous ? delta_start : 0.0; }
};

/// Bias-correction kernels c_a(t) = a/(1-e^{-a t}), c_b(t) = b/(1-e^{-b t}); t > 0.
double bias_coefficient(char which, double t, const HyperParams& hp);

struct Drift {
  Vec dx, dz, dy;
  void resize(int m) {
    dx.assign(m, 0.0);
    dz.assign(m, 0.0);
    dy.assign(m, 0.0);
  }
};

/// Drift of the three blocks at model time t (t ignored for the homogeneous system).
/// The diffusion acts on z only, with the scalar coefficient from diffusion_coeff.
void drift(SystemKind system, double t, const State& s, const Objective& obj, const HyperParams& hp, Drift& out);
double diffusion_coeff(SystemKind system, double t, const HyperParams& hp);

/// One integrator step from model time t. dW must be N(0, dt I). Euler-Maruyama clamps
/// y at 0 and counts clamps; exp_y relaxes y exactly and preserves positivity.
void sde_step(State& s, double t, const SdeConfig& cfg, const Objective& obj, const HyperParams& hp,
              std::span<const double> dW, long& clamp_count, Vec& grad_buf);

struct Trajectory {
  Vec times;
  std::vector<State> states;      // full path if keep_path, else {initial, terminal}
  std::vector<Vec> increments;    // per-step dW if keep_increments
  long clamp_count = 0;
  const State& terminal() const { return states.back(); }
};

/// Deterministic given (config, seed, trajectory_id). noise_override supplies the
/// Brownian increments per step instead of the counter-based stream.
Trajectory simulate(const SdeConfig& cfg, const Objective& obj, const HyperParams& hp, const State& init,
                    std::uint32_t trajectory_id = 0, const std::vector<Vec>* noise_override = nullptr,
                    std::uint64_t step_index_offset = 0);

struct CoupledPairResult {
  State common_state;   // state handed from the inhomogeneous run at time s
  State inhom_end, hom_end;
  double sup_sq_diff = 0.0;  // sup over the grid of ||state_inhom - state_hom||^2 on [0, horizon]
};

/// Runs the inhomogeneous system to time s, then both systems from the common state
/// over [0, horizon] with identical Brownian increments.
CoupledPairResult simulate_coupled_pair(double s, double horizon, const Objective& obj, const HyperParams& hp,
                                        const State& init, double dt, std::uint64_t seed,
                                        std::uint32_t trajectory_id = 0, double delta_start = -1.0);

using InitSampler = std::function<State(std::uint32_t trajectory_id)>;

InitSampler point_init(State s);
/// Gaussian cloud on (x, z); y = |y_center + y_sd * N| so the orthant constraint holds.
InitSampler gaussian_init(const State& center, double x_sd, double z_sd, double y_sd, std::uint64_t seed);

/// Snapshots of n trajectories at the given model times (each must be >= start time).
std::vector<EmpiricalMeasure> simulate_ensemble(const SdeConfig& cfg, const Objective& obj, const HyperParams& hp,
                                                const InitSampler& init, int n, std::span<const double> checkpoints,
                                                int workers = 0, std::uint32_t id_offset = 0);

}  // namespace adamlab
