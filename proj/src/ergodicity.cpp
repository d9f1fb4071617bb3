#include "adamlab/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adamlab/lyapunov.hpp"
#include "adamlab/rng.hpp"
#include "adamlab/stats.hpp"

namespace adamlab {

namespace {

void random_direction(SequentialRng& rng, Vec& dir) {
  double norm = 0.0;
  do {
    for (auto& d : dir) {
      d = rng.normal();
    }
    norm = norm2(dir);
  } while (norm < 1e-12);
  for (auto& d : dir) d /= norm;
}

void project(const EmpiricalMeasure& mu, const Vec& dir, Vec& out) {
  out.resize(mu.n);
  const int w = mu.row_width();
  for (int i = 0; i < mu.n; ++i) {
    const auto r = mu.row(i);
    double s = 0.0;
    for (int j = 0; j < w; ++j) s += r[j] * dir[j];
    out[i] = s;
  }
}

}  // namespace

SlicedW2 sliced_w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int n_proj, std::uint64_t seed) {
  if (mu.m != nu.m) throw std::invalid_argument("sliced_w2: dimension mismatch");
  if (n_proj < 8) throw std::invalid_argument("sliced_w2: n_proj >= 8 required");

  SequentialRng rng(seed, 0x51edu);
  Vec dir(mu.row_width()), pa, pb;
  Vec per_proj(n_proj);
  for (int p = 0; p < n_proj; ++p) {
    random_direction(rng, dir);
    project(mu, dir, pa);
    project(nu, dir, pb);
    per_proj[p] = w2_sq_1d(pa, pb);
  }
  const auto mv = mean_var(per_proj);
  SlicedW2 out;
  out.n_projections = n_proj;
  out.estimate = std::sqrt(std::max(0.0, mv.mean));
  // delta method for sqrt; falls back to the raw se scale near zero
  out.std_error = out.estimate > 1e-12 ? mv.std_error() / (2.0 * out.estimate) : std::sqrt(mv.std_error());
  return out;
}

namespace {

GridTv grid_tv_impl(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int bins_per_dim, const Vec& lo,
                    const Vec& hi, const std::vector<int>& dims) {
  const int d = static_cast<int>(dims.size());
  std::size_t cells = 1;
  for (int k = 0; k < d; ++k) cells *= static_cast<std::size_t>(bins_per_dim);
  if (cells > (1u << 24)) throw std::invalid_argument("grid_tv: grid too large");

  auto histogram = [&](const EmpiricalMeasure& ens, int from, int to, Vec& h) -> double {
    h.assign(cells, 0.0);
    long inside = 0;
    for (int i = from; i < to; ++i) {
      const auto r = ens.row(i);
      std::size_t idx = 0;
      bool in = true;
      for (int k = 0; k < d; ++k) {
        const double v = r[dims[k]];
        if (v < lo[k] || v > hi[k]) {
          in = false;
          break;
        }
        auto bin = static_cast<long>((v - lo[k]) / (hi[k] - lo[k]) * bins_per_dim);
        bin = std::clamp<long>(bin, 0, bins_per_dim - 1);
        idx = idx * bins_per_dim + static_cast<std::size_t>(bin);
      }
      if (in) {
        h[idx] += 1.0;
        ++inside;
      }
    }
    const double total = static_cast<double>(to - from);
    for (auto& c : h) c /= total;
    return inside / total;
  };

  auto tv_from = [&](const Vec& p, const Vec& q) {
    double s = 0.0;
    for (std::size_t c = 0; c < cells; ++c) s += std::abs(p[c] - q[c]);
    return 0.5 * s;
  };

  GridTv out;
  out.bins_per_dim = bins_per_dim;
  Vec hm, hn;
  out.coverage_mu = histogram(mu, 0, mu.n, hm);
  out.coverage_nu = histogram(nu, 0, nu.n, hn);
  out.estimate = tv_from(hm, hn);
  out.box_warning = out.coverage_mu < 0.99 || out.coverage_nu < 0.99;

  Vec h1, h2;
  histogram(mu, 0, mu.n / 2, h1);
  histogram(mu, mu.n / 2, mu.n, h2);
  out.noise_floor = tv_from(h1, h2);
  return out;
}

}  // namespace

GridTv grid_tv(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int bins_per_dim, const Vec& lo, const Vec& hi,
               std::vector<int> dims) {
  if (mu.m != nu.m) throw std::invalid_argument("grid_tv: dimension mismatch");
  if (dims.empty()) {
    dims.resize(mu.row_width());
    std::iota(dims.begin(), dims.end(), 0);
  }
  if (lo.size() != dims.size() || hi.size() != dims.size())
    throw std::invalid_argument("grid_tv: box does not match the selected dims");
  return grid_tv_impl(mu, nu, bins_per_dim, lo, hi, dims);
}

GridTv grid_tv_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int bins_per_dim, std::vector<int> dims) {
  if (dims.empty()) {
    dims.resize(mu.row_width());
    std::iota(dims.begin(), dims.end(), 0);
  }
  Vec lo(dims.size(), std::numeric_limits<double>::infinity());
  Vec hi(dims.size(), -std::numeric_limits<double>::infinity());
  for (const auto* ens : {&mu, &nu})
    for (int i = 0; i < ens->n; ++i) {
      const auto r = ens->row(i);
      for (std::size_t k = 0; k < dims.size(); ++k) {
        lo[k] = std::min(lo[k], r[dims[k]]);
        hi[k] = std::max(hi[k], r[dims[k]]);
      }
    }
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const double pad = 0.05 * (hi[k] - lo[k]) + 1e-12;
    lo[k] -= pad;
    hi[k] += pad;
  }
  return grid_tv(mu, nu, bins_per_dim, lo, hi, dims);
}

namespace {

double tail_second_moment(const EmpiricalMeasure& mu, double R) {
  double s = 0.0;
  for (int i = 0; i < mu.n; ++i) {
    const double n2 = norm2_sq(mu.row(i));
    if (n2 > R * R) s += n2;
  }
  return s / static_cast<double>(mu.n);
}

}  // namespace

std::vector<TruncationRow> truncation_inequality_check(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                                       std::span<const double> R_list, int n_proj,
                                                       std::uint64_t seed) {
  const auto sw = sliced_w2(mu, nu, n_proj, seed);
  const int bins = mu.row_width() <= 4 ? 15 : 8;
  const auto tv = grid_tv_auto(mu, nu, bins);

  std::vector<TruncationRow> rows;
  for (double R : R_list) {
    TruncationRow row;
    row.R = R;
    row.lhs_sq = sq(sw.estimate);
    row.tv = tv.estimate;
    row.tail_mu = tail_second_moment(mu, R);
    row.tail_nu = tail_second_moment(nu, R);
    row.slack = 3.0 * (2.0 * sw.estimate * sw.std_error);  // stderr of the squared estimate
    const double rhs = 8.0 * R * R * row.tv + 4.0 * row.tail_mu + 4.0 * row.tail_nu;
    row.margin = rhs + row.slack - row.lhs_sq;
    row.holds = row.margin >= 0.0;
    rows.push_back(row);
  }
  return rows;
}

ConvergenceCurve convergence_study(const SdeConfig& cfg, const Objective& obj, const HyperParams& hp,
                                   const InitSampler& start_a, const InitSampler& start_b, int n,
                                   std::span<const double> checkpoints, int n_proj, int workers,
                                   bool keep_ensembles) {
  if (checkpoints.size() < 4) throw std::invalid_argument("convergence_study: need >= 4 checkpoints");

  SdeConfig cfg_b = cfg;
  cfg_b.seed = cfg.seed + 0x9e37u;  // independent ensembles
  const auto ens_a = simulate_ensemble(cfg, obj, hp, start_a, n, checkpoints, workers, 0);
  const auto ens_b = simulate_ensemble(cfg_b, obj, hp, start_b, n, checkpoints, workers, 1u << 24);

  ConvergenceCurve curve;
  curve.times.assign(checkpoints.begin(), checkpoints.end());
  double floor = 0.0;
  {
    // noise floor: sliced W2 between two halves of the same terminal ensemble
    const auto& last = ens_a.back();
    EmpiricalMeasure h1(last.n / 2, last.m), h2(last.n - last.n / 2, last.m);
    for (int i = 0; i < h1.n; ++i) h1.set_row(i, last.state(i));
    for (int i = 0; i < h2.n; ++i) h2.set_row(i, last.state(h1.n + i));
    floor = sliced_w2(h1, h2, n_proj, cfg.seed + 5).estimate;
  }
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const auto sw = sliced_w2(ens_a[c], ens_b[c], n_proj, cfg.seed + 100 + c);
    curve.distances.push_back(sw.estimate);
    curve.stderrs.push_back(sw.std_error);
  }

  // rate fit over the decaying segment, ignoring checkpoints at the noise floor
  Vec ts, logd;
  for (std::size_t c = 0; c < curve.distances.size(); ++c) {
    if (curve.distances[c] > 5.0 * floor && curve.distances[c] > 0.0) {
      ts.push_back(curve.times[c]);
      logd.push_back(std::log(curve.distances[c]));
      curve.fit_hi = static_cast<int>(c) + 1;
    }
  }
  curve.noise_floor = floor;
  if (ts.size() >= 2) {
    const auto fit = fit_line(ts, logd);
    curve.lambda_hat = -fit.slope;
    curve.intercept = fit.intercept;
    curve.r2 = fit.r2;
    curve.decaying = curve.lambda_hat > 0.0;
  }
  if (keep_ensembles) {
    curve.ensembles_a = ens_a;
    curve.ensembles_b = ens_b;
  }
  return curve;
}

EmpiricalMeasure stationary_snapshot(const Objective& obj, const HyperParams& hp, double burn_in, int n,
                                     std::uint64_t seed, const InitSampler& init, SnapshotFlags* flags, int workers) {
  double slowest = std::min(hp.a, hp.b);
  if (obj.dissipative() && obj.dissipativity() > 0.0) slowest = std::min(slowest, hp.gamma * obj.dissipativity());
  const double t_min = 10.0 / slowest;
  if (burn_in < t_min)
    throw std::invalid_argument("stationary_snapshot: burn_in below 10/min(a, b, gamma m_f) = " +
                                std::to_string(t_min));
  SdeConfig cfg;
  cfg.system = SystemKind::homogeneous;
  cfg.integrator = Integrator::exp_y;
  cfg.dt = 0.01;
  cfg.horizon = burn_in;
  cfg.seed = seed;

  // last 20% of the run sampled at five points for the flatness diagnostic
  Vec checkpoints;
  for (int k = 4; k >= 0; --k) checkpoints.push_back(burn_in - 0.05 * k * burn_in);
  const auto ens = simulate_ensemble(cfg, obj, hp, init, n, checkpoints, workers);

  if (flags) {
    const auto phis = standard_phi_set(obj.dim());
    const auto residuals = stationarity_residual(phis, ens.back(), obj, hp, workers);
    flags->residual_ok = std::all_of(residuals.begin(), residuals.end(),
                                     [](const ResidualEntry& r) { return r.stationary(); });
    flags->moments_flat = true;
    const auto rows = moment_series(ens, {}, nullptr, nullptr);
    for (std::size_t c = 1; c < rows.size(); ++c) {
      auto flat = [&](double a, double a_se, double b, double b_se) {
        return std::abs(a - b) <= 3.0 * std::sqrt(a_se * a_se + b_se * b_se) + 1e-9;
      };
      if (!flat(rows[0].ex2, rows[0].ex2_se, rows[c].ex2, rows[c].ex2_se) ||
          !flat(rows[0].ez2, rows[0].ez2_se, rows[c].ez2, rows[c].ez2_se) ||
          !flat(rows[0].ey1, rows[0].ey1_se, rows[c].ey1, rows[c].ey1_se))
        flags->moments_flat = false;
    }
  }
  return ens.back();
}

}  // namespace adamlab
