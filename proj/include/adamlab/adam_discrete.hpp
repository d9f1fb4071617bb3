#pragma once

#include <cstdint>
#include <utility>

#include "adamlab/common.hpp"
#include "adamlab/measure.hpp"
#include "adamlab/objective.hpp"
#include "adamlab/rng.hpp"

namespace adamlab {

/// Continuous-time rates of the scaled recursion: alpha = 1 - a h, beta = 1 - b h,
/// eta = gamma h, noise xi_k = (sigma / sqrt(h)) zeta_k.
struct HyperParams {
  double a = 1.0;
  double b = 1.0;
  double gamma = 1.0;
  double sigma = 1.0;
  double eps = 0.5;

  void validate() const;
};

enum class NoiseMode { exact_square, closure, noiseless };

struct DiscreteParams {
  double h = 0.01;
  long steps = 100;  // K
  NoiseMode noise_mode = NoiseMode::closure;
  State init;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Bias-correction prefactors theta_k = (1-alpha)/(1-alpha^{k+1}) = a h / (1-(1-a h)^{k+1})
/// and the analogous b-factor. Requires 1 - a h and 1 - b h in (0, 1).
std::pair<double, double> bias_factors(long k, double h, double a, double b);

/// One step of the bias-corrected recursion; zeta is the standard-normal vector for
/// step k (ignored in noiseless mode). grad_buf is scratch of size m.
void adam_step(State& s, long k, const Objective& obj, const HyperParams& hp, const DiscreteParams& dp,
               std::span<const double> zeta, Vec& grad_buf);

struct DiscreteTrace {
  double h = 0.0;
  Vec times;                  // t_k = k h, size K+1
  std::vector<State> states;  // size K+1

  /// Piecewise-constant cadlag interpolation X^h(t) = x_k for t in [t_k, t_{k+1}).
  const State& at_time(double t) const;
  const State& terminal() const { return states.back(); }
};

/// Deterministic given (params, seed, trajectory_id).
DiscreteTrace run_discrete(const Objective& obj, const HyperParams& hp, const DiscreteParams& dp,
                           std::uint32_t trajectory_id = 0);

/// Terminal states of n independent trajectories (trajectory ids offset..offset+n-1).
EmpiricalMeasure run_discrete_ensemble(const Objective& obj, const HyperParams& hp, const DiscreteParams& dp, int n,
                                       int workers = 0, std::uint32_t id_offset = 0);

}  // namespace adamlab
