#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/common.hpp"
#include "adamlab/measure.hpp"
#include "adamlab/objective.hpp"

namespace adamlab {

// Smooth test function phi(x, z, y) with optional analytic derivative hooks; when a
// hook is missing, central finite differences with step 1e-5 * (1 + |coord|) are used.
// Gradients and second-derivative diagonals are laid out as (x_1..x_m, z_1..z_m, y_1..y_m).
struct TestFunction {
  std::string name;
  std::function<double(const State&)> value;
  std::function<void(const State&, Vec&)> gradient;         // optional, writes 3m entries
  std::function<void(const State&, Vec&)> second_diagonal;  // optional, writes 3m entries
};

/// Applies the generator
///   L phi = sum_i [ -gamma z_i/(sqrt(y_i)+eps) d_{x_i} + a(d_i f - z_i) d_{z_i}
///                   + b(-y_i + (d_i f)^2 + sigma^2) d_{y_i} ] + (a^2 sigma^2 / 2) sum_i d^2_{z_i z_i}
/// plus eps_reg * (Delta_x + Delta_y) when eps_reg > 0. The regularized operator is defined
/// on all of R^{3m} via sqrt(|y_i|); with eps_reg = 0 the state must satisfy y > 0.
double apply_generator(const TestFunction& phi, const State& s, const Objective& obj, const HyperParams& hp,
                       double eps_reg = 0.0);

struct ResidualEntry {
  std::string phi;
  double mean = 0.0;
  double std_error = 0.0;
  long n = 0;
  bool stationary() const { return std::abs(mean) <= 3.0 * std_error; }
};

/// Monte-Carlo mean of L phi under the empirical measure; a (near-)stationary ensemble
/// gives |mean| <= 3 SE for every phi (weak invariance of pi_infty).
std::vector<ResidualEntry> stationarity_residual(std::span<const TestFunction> phis, const EmpiricalMeasure& ens,
                                                 const Objective& obj, const HyperParams& hp, int workers = 0);

// Ready-made coordinate test functions with analytic hooks.
TestFunction phi_coordinate(char block, int j);  // block in {'x','z','y'}
TestFunction phi_z_squared(int j);
TestFunction phi_xz(int j);
/// Default set used to flag snapshots: {z_j, z_j^2, y_j, x_j z_j} over all coordinates.
std::vector<TestFunction> standard_phi_set(int m);

}  // namespace adamlab
