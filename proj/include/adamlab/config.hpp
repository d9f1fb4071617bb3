#pragma once

#include <optional>
#include <string>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/io.hpp"
#include "adamlab/objective.hpp"
#include "adamlab/sde.hpp"

namespace adamlab {

/// Raised on malformed configuration; what() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DiscreteBlock {
  double h = 0.01;
  long steps = 100;
  NoiseMode noise_mode = NoiseMode::closure;
  State init;
};

struct SdeBlock {
  SystemKind system = SystemKind::homogeneous;
  Integrator integrator = Integrator::exp_y;
  double dt = 0.01;
  double horizon = 1.0;
  double delta_start = 0.01;
  State init;
};

struct LimitCheckBlock {
  Vec h_grid = {0.1, 0.05, 0.025};
  double h_ref = 1.0 / 640.0;
  int n = 20000;
  double horizon = 5.0;
  double delta = 0.1;
  NoiseMode noise_mode = NoiseMode::closure;
  State init;
};

struct LyapunovBlock {
  double safety = 0.5;
  double box_radius = 50.0;
  long n = 100000;
  double eta = -1.0;        // < 0 means sigma^2/2
  Vec upsilons = {0.0, 0.5};
};

struct DegeneracyBlock {
  double box_radius = 3.0;
  int grid = 41;            // map resolution per dimension (m <= 2)
  double tol_row = 1e-10;
  double tol_det = 1e-10;
  int n_tries = 1000;
  double margin = 0.05;
};

struct ControlBlock {
  int n_plans = 50;
  double tol = 1e-4;
  double dt = 0.0;          // 0 means derived
  double box_radius = 2.0;  // regular-point search box
  int n_tries = 1000;
  double margin = 0.05;
};

struct ErgodicityBlock {
  int n = 20000;
  Vec checkpoints;
  int n_projections = 64;
  State point_start;
  double cloud_sd = 2.0;
  Vec truncation_R = {1.0, 2.0, 5.0, 10.0};
};

struct ExperimentConfig {
  std::string version = "1";
  std::uint64_t seed = 0;
  json objective;  // normalized descriptor, e.g. {"kind":"quad_cosine","m_q":1.0,"s":0.5,"dim":2}
  HyperParams hp;
  std::optional<DiscreteBlock> discrete;
  std::optional<SdeBlock> sde;
  std::optional<LimitCheckBlock> limit_check;
  std::optional<LyapunovBlock> lyapunov;
  std::optional<DegeneracyBlock> degeneracy;
  std::optional<ControlBlock> control;
  std::optional<ErgodicityBlock> ergodicity;

  ObjectivePtr make_objective() const;
};

/// Strict parse: a required "version" field, unknown keys rejected, missing keys named.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
json to_json(const ExperimentConfig& cfg);

ObjectivePtr objective_from_json(const json& j);
json objective_to_json(const Objective& obj);

}  // namespace adamlab
