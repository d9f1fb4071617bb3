#pragma once

#include <cstdint>
#include <utility>

#include "adamlab/generator.hpp"
#include "adamlab/measure.hpp"
#include "adamlab/sde.hpp"

namespace adamlab {

struct SlicedW2 {
  double estimate = 0.0;
  double std_error = 0.0;
  int n_projections = 0;
};

/// Sliced Wasserstein-2: sqrt of the mean of 1-D W2^2 over random unit directions.
/// A monotone-comparable lower-bound proxy for W2, not the exact distance.
SlicedW2 sliced_w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int n_proj, std::uint64_t seed);

struct GridTv {
  double estimate = 0.0;     // (1/2) sum_cells |p - q| on the histogram
  double noise_floor = 0.0;  // same statistic between split halves of mu
  double coverage_mu = 0.0, coverage_nu = 0.0;
  int bins_per_dim = 0;
  bool box_warning = false;  // coverage below 99%
};

/// Histogram total-variation proxy over the product box [lo, hi]^dims (upper-biased on
/// equal laws by binomial noise; the floor is reported). dims selects coordinates of the
/// flattened (x, z, y) layout; empty means all 3m.
GridTv grid_tv(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int bins_per_dim, const Vec& lo, const Vec& hi,
               std::vector<int> dims = {});

/// Automatic box: componentwise sample range of both measures, padded 5%.
GridTv grid_tv_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int bins_per_dim,
                    std::vector<int> dims = {});

struct TruncationRow {
  double R = 0.0;
  double lhs_sq = 0.0;        // sliced W2 squared
  double tv = 0.0;            // grid TV
  double tail_mu = 0.0;       // E[|u|^2 ; |u| > R]
  double tail_nu = 0.0;
  double slack = 0.0;         // 3 * stderr allowance
  double margin = 0.0;        // rhs + slack - lhs
  bool holds = false;
};

/// W2(mu,nu)^2 <= 8 R^2 TV + 4 tail2(mu,R) + 4 tail2(nu,R), checked on the sample
/// proxies with a 3-stderr slack, for each R in the list.
std::vector<TruncationRow> truncation_inequality_check(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                                       std::span<const double> R_list, int n_proj = 64,
                                                       std::uint64_t seed = 17);

struct ConvergenceCurve {
  Vec times;
  Vec distances;
  Vec stderrs;
  double noise_floor = 0.0;
  double lambda_hat = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int fit_lo = 0, fit_hi = 0;  // checkpoint window used for the rate fit
  bool decaying = false;
  std::vector<EmpiricalMeasure> ensembles_a, ensembles_b;  // kept on request
};

/// Evolves two ensembles and tracks the sliced-W2 distance between them at the given
/// checkpoints; fits log-distance over the decaying segment (points above 5x the noise
/// floor). A non-decaying curve is reported, not thrown.
ConvergenceCurve convergence_study(const SdeConfig& cfg, const Objective& obj, const HyperParams& hp,
                                   const InitSampler& start_a, const InitSampler& start_b, int n,
                                   std::span<const double> checkpoints, int n_proj = 64, int workers = 0,
                                   bool keep_ensembles = false);

struct SnapshotFlags {
  bool residual_ok = false;  // stationarity_residual passes on the standard phi set
  bool moments_flat = false; // E|x|^2, E|z|^2, E|y|_1 flat over the last 20% of the run
  bool stationary() const { return residual_ok && moments_flat; }
};

/// Long-run ensemble snapshot at burn_in; flags indicate whether it passes the
/// stationarity diagnostics.
EmpiricalMeasure stationary_snapshot(const Objective& obj, const HyperParams& hp, double burn_in, int n,
                                     std::uint64_t seed, const InitSampler& init, SnapshotFlags* flags = nullptr,
                                     int workers = 0);

}  // namespace adamlab
