#include "adamlab/measure.hpp"

#include <cmath>

namespace adamlab {

void EmpiricalMeasure::set_row(int i, const State& s) {
  auto r = row(i);
  for (int j = 0; j < m; ++j) {
    r[j] = s.x[j];
    r[m + j] = s.z[j];
    r[2 * m + j] = s.y[j];
  }
}

State EmpiricalMeasure::state(int i) const {
  State s(m);
  auto r = row(i);
  for (int j = 0; j < m; ++j) {
    s.x[j] = r[j];
    s.z[j] = r[m + j];
    s.y[j] = r[2 * m + j];
  }
  return s;
}

Vec EmpiricalMeasure::column(int c) const {
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = row(i)[c];
  return out;
}

bool EmpiricalMeasure::finite() const {
  for (double v : samples)
    if (!std::isfinite(v)) return false;
  return true;
}

bool EmpiricalMeasure::y_nonnegative() const {
  for (int i = 0; i < n; ++i) {
    auto r = row(i);
    for (int j = 2 * m; j < 3 * m; ++j)
      if (r[j] < 0.0) return false;
  }
  return true;
}

void EmpiricalMeasure::validate() const {
  if (n < 2) throw std::invalid_argument("EmpiricalMeasure: need n >= 2");
  if (!finite()) throw std::invalid_argument("EmpiricalMeasure: non-finite sample");
  if (!y_nonnegative()) throw std::invalid_argument("EmpiricalMeasure: negative y component");
}

}  // namespace adamlab
