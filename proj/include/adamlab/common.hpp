#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace adamlab {

using Vec = std::vector<double>;

/// Parameter outside its admissible range; `what()` names the failed inequality.
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite state encountered while iterating; carries the step index and model time.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, std::int64_t step, double time)
      : std::runtime_error(msg + " (step " + std::to_string(step) + ", t=" + std::to_string(time) + ")"),
        step(step),
        time(time) {}
  std::int64_t step;
  double time;
};

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ControlError : public std::runtime_error {
 public:
  ControlError(const std::string& stage, const std::string& msg)
      : std::runtime_error("[" + stage + "] " + msg), stage(stage) {}
  std::string stage;
};

/// Point of the state space E = R^m x R^m x [0,inf)^m.
struct State {
  Vec x, z, y;

  State() = default;
  State(Vec x_, Vec z_, Vec y_) : x(std::move(x_)), z(std::move(z_)), y(std::move(y_)) {}
  explicit State(int m) : x(m, 0.0), z(m, 0.0), y(m, 0.0) {}

  int dim() const { return static_cast<int>(x.size()); }
  bool finite() const;
  bool y_nonnegative() const;
};

inline double sq(double v) { return v * v; }

double norm2_sq(std::span<const double> v);
double norm2(std::span<const double> v);
double norm1(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

/// Runs fn(begin, end) over a static partition of [0, n). workers <= 0 means all cores.
void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t, std::int64_t)>& fn);

int resolve_workers(int workers);

}  // namespace adamlab
