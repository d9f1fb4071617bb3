#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/common.hpp"
#include "adamlab/objective.hpp"

namespace adamlab {

/// Noise-propagation matrix A(x) = Diag(grad f(x)) H_f(x). Its zero rows mark where a
/// forcing direction is lost; its singularity marks where the forcing directions fail
/// to span R^m.
Eigen::MatrixXd matrix_A(std::span<const double> x, const Objective& obj);

enum class DegenClass { regular, rank_degenerate, row_degenerate };

struct DegeneracyReport {
  Vec x;
  Eigen::MatrixXd A;
  double min_row_norm = 0.0;
  double abs_det = 0.0;
  DegenClass cls = DegenClass::regular;
  double tol_row = 0.0, tol_det = 0.0;
  bool row_degenerate() const { return cls == DegenClass::row_degenerate; }
  bool rank_degenerate() const { return cls != DegenClass::regular; }  // zero row implies singular
};

DegeneracyReport classify(std::span<const double> x, const Objective& obj, double tol_row = 1e-10,
                          double tol_det = 1e-10);

/// Vector field on R^{3m}, evaluated into a (x-block, z-block, y-block) flat vector.
using VectorField = std::function<void(const State&, Vec&)>;

VectorField drift_field(ObjectivePtr obj, const HyperParams& hp);   // X_0
VectorField diffusion_field(int i, int m, const HyperParams& hp);   // X_i = a sigma d_{z_i}
/// Closed-form bracket as a field: order 1 -> [X_i, X_0], order 2 -> [[X_i, X_0], X_0].
VectorField bracket_field(int order, int i, ObjectivePtr obj, const HyperParams& hp);

/// Closed-form iterated bracket evaluated at a state (y > 0 required; the order-2
/// x-slot carries a 1/sqrt(y_i) factor that is singular on the boundary).
void lie_bracket_closed_form(int order, int i, const State& s, const Objective& obj, const HyperParams& hp, Vec& out);

/// [V, W](s) = DW(s) V(s) - DV(s) W(s) with central-difference Jacobians. In this
/// convention the closed forms above pair up as
///   bracket(1, i) = numeric_commutator(X_0, X_i),
///   bracket(2, i) = numeric_commutator(bracket(1, i), X_0);
/// antisymmetry makes the choice a pure bookkeeping convention.
void numeric_commutator(const VectorField& V, const VectorField& W, const State& s, Vec& out, double fd_step = 1e-5);

struct RegularPointCertificate {
  Vec x_star;
  double radius = 0.0;  // r: the grid check covers the closed ball of radius 2r
  double margin = 0.0;  // requested lower bound on |det A|
  double grid_min = 0.0;
  int grid_per_dim = 0;
};

/// Rejection sampling plus coordinate-wise golden-section polish of |det A|, then a
/// deterministic grid certificate over B(x_*, 2r). Throws SearchError when the box
/// yields nothing above the margin.
RegularPointCertificate find_regular_point(const Objective& obj, double box_radius, int n_tries, double margin,
                                           std::uint64_t seed);

/// Re-evaluates the certificate grid at the given refinement (soundness check helper).
double certificate_grid_min(const RegularPointCertificate& cert, const Objective& obj, int per_dim);

}  // namespace adamlab
