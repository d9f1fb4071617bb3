#pragma once

#include <span>
#include <vector>

#include "adamlab/common.hpp"

namespace adamlab {

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  long n = 0;
  double std_error() const;
};

MeanVar mean_var(std::span<const double> v);

/// Two-sample Kolmogorov-Smirnov statistic sup_t |F1(t) - F2(t)|.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Squared 1-D Wasserstein-2 between empirical measures (quantile coupling;
/// sample sizes may differ). Inputs are copied and sorted internally.
double w2_sq_1d(std::span<const double> a, std::span<const double> b);

/// Empirical lag-correlation between paired samples.
double correlation(std::span<const double> a, std::span<const double> b);

}  // namespace adamlab
