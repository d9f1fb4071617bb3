#include "adamlab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace adamlab {

double MeanVar::std_error() const { return n > 1 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }

MeanVar mean_var(std::span<const double> v) {
  MeanVar out;
  out.n = static_cast<long>(v.size());
  if (out.n == 0) return out;
  double m = 0.0;
  for (double t : v) m += t;
  m /= static_cast<double>(out.n);
  double s = 0.0;
  for (double t : v) s += (t - m) * (t - m);
  out.mean = m;
  out.variance = out.n > 1 ? s / static_cast<double>(out.n - 1) : 0.0;
  return out;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double t = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= t) ++i;
    while (j < sb.size() && sb[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  LinearFit f;
  const std::size_t n = x.size();
  if (n < 2) return f;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

double w2_sq_1d(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t na = sa.size(), nb = sb.size();
  if (na == 0 || nb == 0) return 0.0;
  if (na == nb) {
    double s = 0.0;
    for (std::size_t i = 0; i < na; ++i) s += sq(sa[i] - sb[i]);
    return s / static_cast<double>(na);
  }
  // Integrate (F^{-1} - G^{-1})^2 over the merged quantile breakpoints.
  double s = 0.0, q = 0.0;
  std::size_t i = 0, j = 0;
  while (i < na && j < nb) {
    const double qa = static_cast<double>(i + 1) / static_cast<double>(na);
    const double qb = static_cast<double>(j + 1) / static_cast<double>(nb);
    const double qn = std::min(qa, qb);
    s += (qn - q) * sq(sa[i] - sb[j]);
    q = qn;
    if (qa <= qn) ++i;
    if (qb <= qn) ++j;
  }
  return s;
}

double correlation(std::span<const double> a, std::span<const double> b) {
  const auto ma = mean_var(a), mb = mean_var(b);
  if (ma.n < 2 || ma.variance == 0.0 || mb.variance == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma.mean) * (b[i] - mb.mean);
  s /= static_cast<double>(ma.n - 1);
  return s / std::sqrt(ma.variance * mb.variance);
}

}  // namespace adamlab
