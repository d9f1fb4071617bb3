#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "adamlab/common.hpp"

namespace adamlab {

/// Particle population on R^{3m}: row i holds (x, z, y) of particle i.
struct EmpiricalMeasure {
  int n = 0;
  int m = 0;  // state dimension; row width is 3m
  double time = 0.0;
  std::uint64_t seed = 0;
  std::string provenance;  // config hash or a short label
  Vec samples;             // row-major, n x 3m

  EmpiricalMeasure() = default;
  EmpiricalMeasure(int n_, int m_) : n(n_), m(m_), samples(static_cast<std::size_t>(n_) * 3 * m_, 0.0) {}

  int row_width() const { return 3 * m; }
  std::span<double> row(int i) { return {samples.data() + static_cast<std::size_t>(i) * row_width(), static_cast<std::size_t>(row_width())}; }
  std::span<const double> row(int i) const {
    return {samples.data() + static_cast<std::size_t>(i) * row_width(), static_cast<std::size_t>(row_width())};
  }
  void set_row(int i, const State& s);
  State state(int i) const;

  /// Column extracted into a fresh vector (coordinate c in [0, 3m)).
  Vec column(int c) const;

  bool finite() const;
  bool y_nonnegative() const;
  void validate() const;  // n >= 2, finite, y >= 0
};

}  // namespace adamlab
