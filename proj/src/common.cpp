#include "adamlab/common.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace adamlab {

bool State::finite() const {
  auto ok = [](const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double t) { return std::isfinite(t); });
  };
  return ok(x) && ok(z) && ok(y);
}

bool State::y_nonnegative() const {
  return std::all_of(y.begin(), y.end(), [](double t) { return t >= 0.0; });
}

double norm2_sq(std::span<const double> v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(norm2_sq(v)); }

double norm1(std::span<const double> v) {
  double s = 0.0;
  for (double t : v) s += std::abs(t);
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int w = std::min<std::int64_t>(resolve_workers(workers), n);
  if (w <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  const std::int64_t chunk = (n + w - 1) / w;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (int t = 0; t < w; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace adamlab
