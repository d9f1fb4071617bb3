#include "adamlab/sde.hpp"

#include <algorithm>
#include <cmath>

#include "adamlab/rng.hpp"

namespace adamlab {

void SdeConfig::validate() const {
  if (!(dt > 0.0)) throw ParamError("sde.dt > 0 required");
  if (!(horizon >= 0.0)) throw ParamError("sde.horizon >= 0 required");
  if (system == SystemKind::inhomogeneous && !(delta_start > 0.0))
    throw ParamError("sde.delta_start > 0 required (the inhomogeneous system is singular at t = 0)");
}

double bias_coefficient(char which, double t, const HyperParams& hp) {
  if (!(t > 0.0)) throw std::domain_error("bias_coefficient: t > 0 required");
  const double rate = which == 'a' ? hp.a : hp.b;
  return rate / (-std::expm1(-rate * t));
}

void drift(SystemKind system, double t, const State& s, const Objective& obj, const HyperParams& hp, Drift& out) {
  const int m = s.dim();
  out.resize(m);
  const double ca = system == SystemKind::homogeneous ? hp.a : bias_coefficient('a', t, hp);
  const double cb = system == SystemKind::homogeneous ? hp.b : bias_coefficient('b', t, hp);
  Vec g(m);
  obj.gradient(s.x, g);
  for (int i = 0; i < m; ++i) {
    out.dx[i] = -hp.gamma * s.z[i] / (std::sqrt(s.y[i]) + hp.eps);
    out.dz[i] = ca * (g[i] - s.z[i]);
    out.dy[i] = cb * (-s.y[i] + sq(g[i]) + sq(hp.sigma));
  }
}

double diffusion_coeff(SystemKind system, double t, const HyperParams& hp) {
  const double ca = system == SystemKind::homogeneous ? hp.a : bias_coefficient('a', t, hp);
  return ca * hp.sigma;
}

namespace {

// Exact decay factor of the y-relaxation over [t, t+dt]:
//   exp(-int_t^{t+dt} c(s) ds) = e^{-r dt} (1-e^{-r t}) / (1-e^{-r (t+dt)})
// for c(s) = r/(1-e^{-r s}); reduces to e^{-r dt} as t -> infinity.
double relax_decay(SystemKind system, double rate, double t, double dt) {
  if (system == SystemKind::homogeneous) return std::exp(-rate * dt);
  return std::exp(-rate * dt) * (-std::expm1(-rate * t)) / (-std::expm1(-rate * (t + dt)));
}

}  // namespace

void sde_step(State& s, double t, const SdeConfig& cfg, const Objective& obj, const HyperParams& hp,
              std::span<const double> dW, long& clamp_count, Vec& grad_buf) {
  const int m = s.dim();
  const double dt = cfg.dt;
  const double ca = cfg.system == SystemKind::homogeneous ? hp.a : bias_coefficient('a', t, hp);
  const double cb = cfg.system == SystemKind::homogeneous ? hp.b : bias_coefficient('b', t, hp);

  obj.gradient(s.x, grad_buf);
  if (cfg.integrator == Integrator::euler_maruyama) {
    for (int i = 0; i < m; ++i) {
      const double gi = grad_buf[i];
      const double x_new = s.x[i] - hp.gamma * s.z[i] / (std::sqrt(s.y[i]) + hp.eps) * dt;
      const double z_new = s.z[i] + ca * (gi - s.z[i]) * dt + ca * hp.sigma * dW[i];
      double y_new = s.y[i] + cb * (-s.y[i] + sq(gi) + sq(hp.sigma)) * dt;
      if (y_new < 0.0) {
        y_new = 0.0;
        ++clamp_count;
      }
      s.x[i] = x_new;
      s.z[i] = z_new;
      s.y[i] = y_new;
    }
  } else {
    const double decay = relax_decay(cfg.system, hp.b, t, dt);
    for (int i = 0; i < m; ++i) {
      const double gi = grad_buf[i];
      const double x_new = s.x[i] - hp.gamma * s.z[i] / (std::sqrt(s.y[i]) + hp.eps) * dt;
      const double z_new = s.z[i] + ca * (gi - s.z[i]) * dt + ca * hp.sigma * dW[i];
      s.x[i] = x_new;
      s.z[i] = z_new;
      s.y[i] = decay * s.y[i] + (1.0 - decay) * (sq(gi) + sq(hp.sigma));
    }
  }
}

Trajectory simulate(const SdeConfig& cfg, const Objective& obj, const HyperParams& hp, const State& init,
                    std::uint32_t trajectory_id, const std::vector<Vec>* noise_override,
                    std::uint64_t step_index_offset) {
  cfg.validate();
  hp.validate();
  if (init.dim() != obj.dim()) throw std::invalid_argument("simulate: init/objective dimension mismatch");
  if (!init.y_nonnegative()) throw ParamError("simulate: init must lie in the closure of E (y >= 0)");

  const int m = obj.dim();
  const double t0 = cfg.start_time();
  const long n_steps = static_cast<long>(std::llround(cfg.horizon / cfg.dt));
  GaussianStream stream(cfg.seed, trajectory_id);
  const double sqrt_dt = std::sqrt(cfg.dt);

  Trajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(init);

  State s = init;
  Vec dW(m), gbuf(m);
  for (long k = 0; k < n_steps; ++k) {
    const double t = t0 + k * cfg.dt;
    if (noise_override) {
      dW = (*noise_override)[k];
    } else {
      for (int i = 0; i < m; ++i)
        dW[i] = sqrt_dt * stream.normal(step_index_offset + static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i));
    }
    sde_step(s, t, cfg, obj, hp, dW, traj.clamp_count, gbuf);
    if (!s.finite()) throw DivergenceError("simulate: non-finite state", k, t + cfg.dt);
    if (cfg.keep_increments) traj.increments.push_back(dW);
    if (cfg.keep_path || k == n_steps - 1) {
      traj.times.push_back(t + cfg.dt);
      traj.states.push_back(s);
    }
  }
  if (n_steps == 0 && traj.states.size() == 1) {
    traj.times.push_back(t0);
    traj.states.push_back(init);
  }
  return traj;
}

CoupledPairResult simulate_coupled_pair(double s_time, double horizon, const Objective& obj, const HyperParams& hp,
                                        const State& init, double dt, std::uint64_t seed, std::uint32_t trajectory_id,
                                        double delta_start) {
  const int m = obj.dim();
  SdeConfig warm;
  warm.system = SystemKind::inhomogeneous;
  warm.integrator = Integrator::exp_y;
  warm.dt = dt;
  warm.seed = seed;
  warm.delta_start = delta_start > 0.0 ? delta_start : 0.01 / std::max(hp.a, hp.b);
  if (!(s_time >= warm.delta_start)) throw ParamError("simulate_coupled_pair: s >= delta_start required");
  warm.horizon = s_time - warm.delta_start;

  const Trajectory head = simulate(warm, obj, hp, init, trajectory_id);
  const State common = head.terminal();
  const auto warm_steps = static_cast<std::uint64_t>(std::llround(warm.horizon / dt));

  CoupledPairResult out;
  out.common_state = common;
  if (horizon <= 0.0) {
    out.inhom_end = common;
    out.hom_end = common;
    out.sup_sq_diff = 0.0;
    return out;
  }

  const long n_steps = static_cast<long>(std::llround(horizon / dt));
  GaussianStream stream(seed, trajectory_id);
  SdeConfig inhom_cfg = warm;
  SdeConfig hom_cfg = warm;
  hom_cfg.system = SystemKind::homogeneous;

  State a = common, b = common;
  Vec dW(m), gbuf(m);
  long clamps = 0;
  double sup = 0.0;
  const double sqrt_dt = std::sqrt(dt);
  for (long k = 0; k < n_steps; ++k) {
    for (int i = 0; i < m; ++i)
      dW[i] = sqrt_dt * stream.normal(warm_steps + static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i));
    const double tau = k * dt;
    sde_step(a, s_time + tau, inhom_cfg, obj, hp, dW, clamps, gbuf);  // inhomogeneous clock keeps running
    sde_step(b, tau, hom_cfg, obj, hp, dW, clamps, gbuf);             // t is ignored by the homogeneous system

    double d = 0.0;
    for (int i = 0; i < m; ++i) d += sq(a.x[i] - b.x[i]) + sq(a.z[i] - b.z[i]) + sq(a.y[i] - b.y[i]);
    sup = std::max(sup, d);
  }
  out.inhom_end = a;
  out.hom_end = b;
  out.sup_sq_diff = sup;
  return out;
}

InitSampler point_init(State s) {
  return [s = std::move(s)](std::uint32_t) { return s; };
}

InitSampler gaussian_init(const State& center, double x_sd, double z_sd, double y_sd, std::uint64_t seed) {
  return [=](std::uint32_t id) {
    const int m = center.dim();
    GaussianStream g(seed ^ 0x9e3779b97f4a7c15ull, id);
    State s(m);
    for (int i = 0; i < m; ++i) {
      s.x[i] = center.x[i] + x_sd * g.normal(0, static_cast<std::uint32_t>(i));
      s.z[i] = center.z[i] + z_sd * g.normal(1, static_cast<std::uint32_t>(i));
      s.y[i] = std::abs(center.y[i] + y_sd * g.normal(2, static_cast<std::uint32_t>(i)));
    }
    return s;
  };
}

std::vector<EmpiricalMeasure> simulate_ensemble(const SdeConfig& cfg, const Objective& obj, const HyperParams& hp,
                                                const InitSampler& init, int n, std::span<const double> checkpoints,
                                                int workers, std::uint32_t id_offset) {
  cfg.validate();
  hp.validate();
  const int m = obj.dim();
  const double t0 = cfg.start_time();

  std::vector<long> check_steps(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    if (checkpoints[c] < t0 - 1e-12) throw ParamError("simulate_ensemble: checkpoint before start time");
    check_steps[c] = static_cast<long>(std::llround((checkpoints[c] - t0) / cfg.dt));
  }
  const long n_steps = check_steps.empty() ? 0 : *std::max_element(check_steps.begin(), check_steps.end());

  std::vector<EmpiricalMeasure> out(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    out[c] = EmpiricalMeasure(n, m);
    out[c].time = checkpoints[c];
    out[c].seed = cfg.seed;
  }

  parallel_for(n, workers, [&](std::int64_t lo, std::int64_t hi) {
    Vec dW(m), gbuf(m);
    const double sqrt_dt = std::sqrt(cfg.dt);
    for (std::int64_t t = lo; t < hi; ++t) {
      const auto id = id_offset + static_cast<std::uint32_t>(t);
      GaussianStream stream(cfg.seed, id);
      State s = init(id);
      long clamps = 0;
      for (std::size_t c = 0; c < check_steps.size(); ++c)
        if (check_steps[c] == 0) out[c].set_row(static_cast<int>(t), s);
      for (long k = 0; k < n_steps; ++k) {
        for (int i = 0; i < m; ++i)
          dW[i] = sqrt_dt * stream.normal(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i));
        sde_step(s, t0 + k * cfg.dt, cfg, obj, hp, dW, clamps, gbuf);
        if (!s.finite()) throw DivergenceError("simulate_ensemble: non-finite state", k, t0 + (k + 1) * cfg.dt);
        for (std::size_t c = 0; c < check_steps.size(); ++c)
          if (check_steps[c] == k + 1) out[c].set_row(static_cast<int>(t), s);
      }
    }
  });
  return out;
}

}  // namespace adamlab
