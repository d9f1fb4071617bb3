#pragma once

#include <cstdint>
#include <optional>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/common.hpp"
#include "adamlab/degeneracy.hpp"
#include "adamlab/objective.hpp"
#include "adamlab/sde.hpp"

namespace adamlab {

/// Control h(t) in R^m sampled on a grid, interpreted piecewise-linearly in between.
/// A repeated time node marks a jump (left value first, right value second); the
/// interpolant is right-continuous there.
struct SkeletonControl {
  Vec times;
  std::vector<Vec> values;

  void append(double t, Vec v);
  Vec at(double t) const;
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  /// Indices starting each maximal smooth segment (jumps split segments).
  std::vector<std::size_t> segment_starts() const;
};

/// Deterministic skeleton right-hand side: the SDE drift with the z-equation augmented
/// by a sigma h_i(t).
void skeleton_rhs(const State& s, std::span<const double> h_ctrl, const Objective& obj, const HyperParams& hp,
                  Drift& out);

/// Classical RK4 with the control interpolated piecewise-linearly.
Trajectory integrate_skeleton(const State& init, const SkeletonControl& control, const Objective& obj,
                              const HyperParams& hp, double dt, bool keep_path = false);

struct StageLeg {
  Vec times;                  // absolute times
  std::vector<State> states;  // one per grid node
  SkeletonControl control;
  double max_excursion = 0.0;  // max ||x(t) - x_ref|| over the leg (x_ref set by caller)
  const State& end() const { return states.back(); }
};

/// Cubic-Hermite initial leg: x interpolates (x0, v0) -> (x_target, 0) over [0, t1] with
/// v0 = -gamma z0 / (sqrt(y0) + eps); y solves its ODE along the path; z and the control
/// are recovered from the trajectory. Throws ControlError for sigma = 0.
StageLeg stage1_initial_leg(const State& u0, const Vec& x_target, double t1, const Objective& obj,
                            const HyperParams& hp, double dt, double t_offset = 0.0);

/// Exact relaxation y(S) = e^{-bS} y_start + (1 - e^{-bS}) (g(x_hold) + sigma^2 1).
Vec stage2_relax_y(const Vec& x_hold, const Vec& y_start, double S, const HyperParams& hp, const Objective& obj);

/// Certified ball around a regular point: det A != 0 on B(x_star, 4 rho_x) (and up to the
/// certificate radius 2 r_cert >= 8 rho_x).
struct RegularBall {
  Vec x_star;
  double rho_x = 0.0;
  double r_cert = 0.0;
};

/// Banach fixed point for the intermediate hold point x^c solving
///   g(x^c) = (y_sharp - e^{-bS} y^c(U0, x^c)) / (1 - e^{-bS}) - sigma^2 1,
/// where y^c(U0, x) is the stage-1 y endpoint steering to x and g^{-1} is computed by
/// damped Newton with Dg = 2 A.
Vec solve_xc(const State& u0, const Vec& y_sharp, double t1, double big_s, const Objective& obj,
             const HyperParams& hp, const RegularBall& ball, double tol, int max_iter, double dt);

struct Stage3Result {
  StageLeg leg;
  Vec alpha_star;
  int newton_iters = 0;
  double y_residual = 0.0;
  double delta_used = 0.0;
};

/// Final Hermite leg with an interior bump perturbation x^alpha = x^0 + psi_delta(t) alpha,
/// psi(r) = r^3 (1-r)^3; alpha solves y^alpha(T) = y_sharp by Newton (Jacobian seeded with
/// b (int psi) 2A(x^c), refreshed by finite differences on stagnation).
Stage3Result stage3_final_leg(const Vec& x_c, const Vec& y_mid, const State& target, double delta_f,
                              const Objective& obj, const HyperParams& hp, const RegularBall& ball,
                              double tol_newton, double dt, double t_offset);

struct ControlSchedule {
  double t1 = 0.0;       // 0 means derive from the geometry
  double big_s = 0.0;    // 0 means derive: 20/b
  double delta_f = 0.0;  // 0 means derive from the containment bound
  double dt = 0.0;       // 0 means 1e-3 * min(1, 1/max(a, b, gamma))
};

struct PlanGeometry {
  Vec x_star;
  double r_cert = 0.0;
  double rho_x = 0.0, rho_z = 0.0, rho_y = 0.0;
  Vec y_star;  // g(x_star) + sigma^2 1
};

/// Derives the target-set geometry from a regular-ball certificate: rho_x = r/4,
/// rho_z = min(eps/gamma, 1), y_star = g(x_star) + sigma^2 1, and rho_y small enough
/// that the bump perturbation respects the stage-3 containment ball.
PlanGeometry plan_geometry(const RegularPointCertificate& cert, const Objective& obj, const HyperParams& hp);

struct ControlPlan {
  double t1 = 0.0, big_s = 0.0, delta_f = 0.0, dt = 0.0;
  Vec x_c;
  Vec alpha_star;
  State start, target;
  SkeletonControl control;
  State analytic_end;  // endpoint of the constructed trajectory
  State replay_end;    // endpoint of re-integration through integrate_skeleton
  double analytic_error = 0.0;
  double replay_error = 0.0;
  double max_excursion_stage3 = 0.0;  // max ||x - x_star|| during the final leg
  double max_excursion = 0.0;         // over the whole plan
  bool success = false;
};

/// Full three-stage construction (x0,z0,y0) -> (x^c,0,y^c) -> (x^c,0,y_sharp) ->
/// (x_sharp,z_sharp,y_sharp), then a replay through integrate_skeleton.
ControlPlan plan_full(const State& u0, const State& target, const Objective& obj, const HyperParams& hp,
                      const PlanGeometry& geom, const ControlSchedule& schedule = {}, double tol = 1e-4);

}  // namespace adamlab
