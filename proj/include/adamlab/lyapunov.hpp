#pragma once

#include <cstdint>
#include <optional>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/common.hpp"
#include "adamlab/generator.hpp"
#include "adamlab/measure.hpp"
#include "adamlab/objective.hpp"

namespace adamlab {

// Parameters of V(x,z,y) = theta (f - f_*) + |z|^2/2 - beta x.z + delta_y |y|_{1,upsilon} + shift
// (the z-block coefficient alpha is fixed to 1) together with the certificate constants of
// the drift form  L_eps V <= -lambda V + big_k 1_{V <= level_m}.
struct LyapunovParams {
  double theta = 0.0;
  double beta = 0.0;
  double delta_y = 0.0;
  double upsilon = 0.0;  // smoothing of the L1 norm in y
  double shift = 0.0;    // additive constant making V >= 1

  double lambda = 0.0;   // lambda'
  double big_k = 0.0;    // K'
  double level_m = 0.0;  // M, the level defining C = {V <= M}

  // two-sided comparability with |x|^2 + |z|^2 + |y|_{1,upsilon} (for the unshifted V)
  double c1_upper = 0.0, c2_upper = 0.0;
  double c1_lower = 0.0, c2_lower = 0.0;

  /// Checks the admissibility inequalities; throws ParamError naming the failed one.
  void validate(const Objective& obj, const HyperParams& hp) const;
};

double eval_V(const LyapunovParams& p, const State& s, const Objective& obj);

/// Picks (beta, theta, delta_y) by the explicit recipe
///   beta = safety a eps/(2 gamma),
///   theta near a eps/gamma with c_g = (a - theta gamma/eps)^2 / (2(a - beta gamma/eps))
///     <= a beta m_f / (16 L_f^2),
///   delta_y = safety a beta m_f / (16 L_f^2 b),
/// derives lambda' = min(c_z, c_x', delta b)/c_1 from the chain of constants, and then
/// calibrates (K', M) by sampled maximization over the check domain (10x oversampling,
/// 20% inflation). box_radius/eta describe that domain; eta < 0 means sigma^2/2.
LyapunovParams select_params(const Objective& obj, const HyperParams& hp, double safety = 0.5,
                             double box_radius = 50.0, double eta = -1.0, std::uint64_t seed = 20240901);

/// The expanded L_eps V assembled term by term:
///   T1 + T2 + T3 - delta b |y|_{1,u} + a^2 sigma^2 m / 2 + R(eps_reg, upsilon).
/// Matches apply_generator on the Lyapunov test function to rounding error.
double closed_form_LV(const LyapunovParams& p, const State& s, const Objective& obj, const HyperParams& hp,
                      double eps_reg = 0.0);

/// V as a TestFunction with analytic derivative hooks (for cross-checks against
/// apply_generator).
TestFunction lyapunov_test_function(const LyapunovParams& p, ObjectivePtr obj);

struct DriftSampler {
  double box_radius = 50.0;
  long n = 100000;
  std::uint64_t seed = 1;
};

struct DriftViolation {
  State state;
  double lv = 0.0;  // L_eps V
  double v = 0.0;
  bool outside = false;  // outside C = {V <= M}
};

struct DriftReport {
  long n = 0;
  long n_outside = 0;
  long violation_count = 0;
  std::vector<DriftViolation> violations;  // capped sample of counterexamples
  double max_outside_slack = 0.0;          // max over outside of LV + lambda V   (<= 0 required)
  double max_inside_slack = 0.0;           // max over inside of LV + lambda V - K' (<= 0 required)
  double lambda = 0.0, big_k = 0.0, level_m = 0.0;
  bool ok() const { return violation_count == 0; }
};

/// Samples the slab E_eta intersected with the box and tests the two-sided drift form.
/// y is sampled with extra mass near the floor eta, where the beta bound is binding.
DriftReport drift_check(const LyapunovParams& p, const Objective& obj, const HyperParams& hp,
                        const DriftSampler& sampler, double eta, double eps_reg = 0.0, int workers = 0);

struct MomentRow {
  double t = 0.0;
  double ex2 = 0.0, ex2_se = 0.0;
  double ez2 = 0.0, ez2_se = 0.0;
  double ey1 = 0.0, ey1_se = 0.0;
  Vec vq, vq_se;  // E[(1+V)^q] per requested q
};

/// Moment curves E|x|^2, E|z|^2, E|y|_1 and E[(1+V)^q] along a sequence of snapshots.
std::vector<MomentRow> moment_series(std::span<const EmpiricalMeasure> series, std::span<const double> q_list,
                                     const LyapunovParams* p = nullptr, const Objective* obj = nullptr);

}  // namespace adamlab
