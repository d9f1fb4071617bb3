#include "adamlab/adam_discrete.hpp"

#include <cmath>

namespace adamlab {

void HyperParams::validate() const {
  if (!(a > 0.0)) throw ParamError("hp.a > 0 required");
  if (!(b > 0.0)) throw ParamError("hp.b > 0 required");
  if (!(gamma > 0.0)) throw ParamError("hp.gamma > 0 required");
  if (!(sigma >= 0.0)) throw ParamError("hp.sigma >= 0 required");
  if (!(eps > 0.0)) throw ParamError("hp.eps > 0 required");
}

void DiscreteParams::validate() const {
  if (!(h > 0.0)) throw ParamError("discrete.h > 0 required");
  if (steps < 0) throw ParamError("discrete.steps >= 0 required");
  if (!init.y_nonnegative()) throw ParamError("discrete.init: y0 >= 0 required");
  if (init.x.size() != init.z.size() || init.x.size() != init.y.size())
    throw ParamError("discrete.init: x, z, y must share one dimension");
}

std::pair<double, double> bias_factors(long k, double h, double a, double b) {
  if (k < 0) throw ParamError("bias_factors: k >= 0 required");
  auto factor = [&](double rate, const char* name) {
    const double alpha = 1.0 - rate * h;
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ParamError(std::string("bias_factors: 1 - ") + name + "*h must lie in (0,1)");
    if (k == 0) return 1.0;  // (1 - alpha)/(1 - alpha) exactly
    // a h / (1 - alpha^{k+1});  -expm1((k+1) log1p(-a h)) is 1 - alpha^{k+1} without cancellation
    const double denom = -std::expm1(static_cast<double>(k + 1) * std::log1p(-rate * h));
    return rate * h / denom;
  };
  return {factor(a, "a"), factor(b, "b")};
}

void adam_step(State& s, long k, const Objective& obj, const HyperParams& hp, const DiscreteParams& dp,
               std::span<const double> zeta, Vec& grad_buf) {
  const int m = s.dim();
  const auto [ta, tb] = bias_factors(k, dp.h, hp.a, hp.b);
  const double eta = hp.gamma * dp.h;
  const double noise_scale = hp.sigma / std::sqrt(dp.h);

  obj.gradient(s.x, grad_buf);
  for (int i = 0; i < m; ++i) {
    const double gi = grad_buf[i];
    const double xi = dp.noise_mode == NoiseMode::noiseless ? 0.0 : noise_scale * zeta[i];

    s.z[i] += ta * (-s.z[i] + gi + xi);

    double target = 0.0;  // the squared-signal slot of the y-recursion
    switch (dp.noise_mode) {
      case NoiseMode::exact_square:
        target = sq(gi + xi);
        break;
      case NoiseMode::closure:
        target = sq(gi) + sq(hp.sigma);
        break;
      case NoiseMode::noiseless:
        target = sq(gi);
        break;
    }
    s.y[i] += tb * (-s.y[i] + target);

    // x uses the freshly updated pair (z_{k+1}, y_{k+1})
    s.x[i] -= eta * s.z[i] / (std::sqrt(s.y[i]) + hp.eps);
  }
  if (!s.finite()) throw DivergenceError("adam_step: non-finite state", k, (k + 1) * dp.h);
}

const State& DiscreteTrace::at_time(double t) const {
  if (t < 0.0) throw std::invalid_argument("at_time: t >= 0 required");
  const auto k = static_cast<std::size_t>(std::floor(t / h));
  return states[std::min(k, states.size() - 1)];
}

DiscreteTrace run_discrete(const Objective& obj, const HyperParams& hp, const DiscreteParams& dp,
                           std::uint32_t trajectory_id) {
  hp.validate();
  dp.validate();
  if (dp.init.dim() != obj.dim()) throw std::invalid_argument("run_discrete: init/objective dimension mismatch");

  const int m = obj.dim();
  GaussianStream stream(dp.seed, trajectory_id);
  DiscreteTrace trace;
  trace.h = dp.h;
  trace.times.reserve(dp.steps + 1);
  trace.states.reserve(dp.steps + 1);
  trace.times.push_back(0.0);
  trace.states.push_back(dp.init);

  State s = dp.init;
  Vec zeta(m), gbuf(m);
  for (long k = 0; k < dp.steps; ++k) {
    if (dp.noise_mode != NoiseMode::noiseless)
      for (int i = 0; i < m; ++i) zeta[i] = stream.normal(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i));
    adam_step(s, k, obj, hp, dp, zeta, gbuf);
    trace.times.push_back((k + 1) * dp.h);
    trace.states.push_back(s);
  }
  return trace;
}

EmpiricalMeasure run_discrete_ensemble(const Objective& obj, const HyperParams& hp, const DiscreteParams& dp, int n,
                                       int workers, std::uint32_t id_offset) {
  hp.validate();
  dp.validate();
  const int m = obj.dim();
  EmpiricalMeasure out(n, m);
  out.time = dp.steps * dp.h;
  out.seed = dp.seed;

  parallel_for(n, workers, [&](std::int64_t lo, std::int64_t hi) {
    State s(m);
    Vec zeta(m), gbuf(m);
    for (std::int64_t t = lo; t < hi; ++t) {
      GaussianStream stream(dp.seed, id_offset + static_cast<std::uint32_t>(t));
      s = dp.init;
      for (long k = 0; k < dp.steps; ++k) {
        if (dp.noise_mode != NoiseMode::noiseless)
          for (int i = 0; i < m; ++i)
            zeta[i] = stream.normal(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i));
        adam_step(s, k, obj, hp, dp, zeta, gbuf);
      }
      out.set_row(static_cast<int>(t), s);
    }
  });
  return out;
}

}  // namespace adamlab
