#include "adamlab/config.hpp"

#include <fstream>
#include <set>

namespace adamlab {

namespace {

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + where + key + "\"");
}

const json& require(const json& j, const std::string& where, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing key \"" + where + key + "\"");
  return *it;
}

double num(const json& j, const std::string& where, const std::string& key) {
  const json& v = require(j, where, key);
  if (!v.is_number()) throw ConfigError("key \"" + where + key + "\" must be a number");
  return v.get<double>();
}

double num_or(const json& j, const std::string& where, const std::string& key, double fallback) {
  return j.contains(key) ? num(j, where, key) : fallback;
}

NoiseMode noise_mode_from(const std::string& s, const std::string& where) {
  if (s == "exact_square") return NoiseMode::exact_square;
  if (s == "closure") return NoiseMode::closure;
  if (s == "noiseless") return NoiseMode::noiseless;
  throw ConfigError("key \"" + where + "noise_mode\" must be exact_square | closure | noiseless");
}

std::string noise_mode_str(NoiseMode m) {
  switch (m) {
    case NoiseMode::exact_square: return "exact_square";
    case NoiseMode::closure: return "closure";
    default: return "noiseless";
  }
}

State init_from(const json& j, const std::string& where) {
  reject_unknown(j, where, {"x", "z", "y"});
  State s;
  s.x = require(j, where, "x").get<Vec>();
  s.z = require(j, where, "z").get<Vec>();
  s.y = require(j, where, "y").get<Vec>();
  if (s.x.size() != s.z.size() || s.x.size() != s.y.size())
    throw ConfigError("init at \"" + where + "\": x, z, y must share one dimension");
  return s;
}

}  // namespace

ObjectivePtr objective_from_json(const json& j) {
  const std::string kind = require(j, "objective.", "kind").get<std::string>();
  if (kind == "quadratic") {
    reject_unknown(j, "objective.", {"kind", "dim", "scale", "Q", "q"});
    if (j.contains("Q")) {
      const auto rows = j.at("Q").get<std::vector<Vec>>();
      const int m = static_cast<int>(rows.size());
      Eigen::MatrixXd Q(m, m);
      for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[i].size()) != m) throw ConfigError("objective.Q must be square");
        for (int k = 0; k < m; ++k) Q(i, k) = rows[i][k];
      }
      Eigen::VectorXd q = Eigen::VectorXd::Zero(m);
      if (j.contains("q")) {
        const auto qv = j.at("q").get<Vec>();
        if (static_cast<int>(qv.size()) != m) throw ConfigError("objective.q dimension mismatch");
        q = Eigen::Map<const Eigen::VectorXd>(qv.data(), m);
      }
      return make_quadratic(Q, q);
    }
    const int dim = static_cast<int>(num(j, "objective.", "dim"));
    return make_quadratic(dim, num_or(j, "objective.", "scale", 1.0));
  }
  if (kind == "quad_cosine") {
    reject_unknown(j, "objective.", {"kind", "m_q", "s", "dim"});
    return make_quad_cosine(num(j, "objective.", "m_q"), num(j, "objective.", "s"),
                            static_cast<int>(num(j, "objective.", "dim")));
  }
  if (kind == "linear") {
    reject_unknown(j, "objective.", {"kind", "g"});
    const auto g = require(j, "objective.", "g").get<Vec>();
    return make_linear(Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()));
  }
  if (kind == "constant") {
    reject_unknown(j, "objective.", {"kind", "c0", "dim"});
    return make_constant(num(j, "objective.", "c0"), static_cast<int>(num(j, "objective.", "dim")));
  }
  throw ConfigError("objective.kind must be quadratic | quad_cosine | linear | constant");
}

ObjectivePtr ExperimentConfig::make_objective() const { return objective_from_json(objective); }

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, "", {"version", "seed", "objective", "hp", "discrete", "sde", "limit_check", "lyapunov",
                         "degeneracy", "control", "ergodicity"});
  ExperimentConfig cfg;
  cfg.version = require(j, "", "version").get<std::string>();
  if (cfg.version != "1") throw ConfigError("unsupported config version \"" + cfg.version + "\"");
  cfg.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;

  cfg.objective = require(j, "", "objective");
  objective_from_json(cfg.objective);  // validate eagerly

  const json& hp = require(j, "", "hp");
  reject_unknown(hp, "hp.", {"a", "b", "gamma", "sigma", "eps"});
  cfg.hp.a = num(hp, "hp.", "a");
  cfg.hp.b = num(hp, "hp.", "b");
  cfg.hp.gamma = num(hp, "hp.", "gamma");
  cfg.hp.sigma = num(hp, "hp.", "sigma");
  cfg.hp.eps = num(hp, "hp.", "eps");
  cfg.hp.validate();

  if (j.contains("discrete")) {
    const json& d = j.at("discrete");
    reject_unknown(d, "discrete.", {"h", "steps", "noise_mode", "init"});
    DiscreteBlock blk;
    blk.h = num(d, "discrete.", "h");
    blk.steps = static_cast<long>(num(d, "discrete.", "steps"));
    blk.noise_mode = noise_mode_from(require(d, "discrete.", "noise_mode").get<std::string>(), "discrete.");
    blk.init = init_from(require(d, "discrete.", "init"), "discrete.init.");
    cfg.discrete = blk;
  }
  if (j.contains("sde")) {
    const json& d = j.at("sde");
    reject_unknown(d, "sde.", {"system", "integrator", "dt", "horizon", "delta_start", "init"});
    SdeBlock blk;
    const std::string system = require(d, "sde.", "system").get<std::string>();
    if (system == "homogeneous")
      blk.system = SystemKind::homogeneous;
    else if (system == "inhomogeneous")
      blk.system = SystemKind::inhomogeneous;
    else
      throw ConfigError("sde.system must be homogeneous | inhomogeneous");
    const std::string integ = d.contains("integrator") ? d.at("integrator").get<std::string>() : "exp_y";
    if (integ == "exp_y")
      blk.integrator = Integrator::exp_y;
    else if (integ == "euler_maruyama")
      blk.integrator = Integrator::euler_maruyama;
    else
      throw ConfigError("sde.integrator must be exp_y | euler_maruyama");
    blk.dt = num(d, "sde.", "dt");
    blk.horizon = num(d, "sde.", "horizon");
    blk.delta_start = num_or(d, "sde.", "delta_start", 0.01);
    blk.init = init_from(require(d, "sde.", "init"), "sde.init.");
    cfg.sde = blk;
  }
  if (j.contains("limit_check")) {
    const json& d = j.at("limit_check");
    reject_unknown(d, "limit_check.", {"h_grid", "h_ref", "n", "horizon", "delta", "noise_mode", "init"});
    LimitCheckBlock blk;
    blk.h_grid = require(d, "limit_check.", "h_grid").get<Vec>();
    blk.h_ref = num(d, "limit_check.", "h_ref");
    blk.n = static_cast<int>(num(d, "limit_check.", "n"));
    blk.horizon = num(d, "limit_check.", "horizon");
    blk.delta = num(d, "limit_check.", "delta");
    if (d.contains("noise_mode"))
      blk.noise_mode = noise_mode_from(d.at("noise_mode").get<std::string>(), "limit_check.");
    blk.init = init_from(require(d, "limit_check.", "init"), "limit_check.init.");
    cfg.limit_check = blk;
  }
  if (j.contains("lyapunov")) {
    const json& d = j.at("lyapunov");
    reject_unknown(d, "lyapunov.", {"safety", "box_radius", "n", "eta", "upsilons"});
    LyapunovBlock blk;
    blk.safety = num_or(d, "lyapunov.", "safety", 0.5);
    blk.box_radius = num_or(d, "lyapunov.", "box_radius", 50.0);
    blk.n = static_cast<long>(num_or(d, "lyapunov.", "n", 100000));
    blk.eta = num_or(d, "lyapunov.", "eta", -1.0);
    if (d.contains("upsilons")) blk.upsilons = d.at("upsilons").get<Vec>();
    cfg.lyapunov = blk;
  }
  if (j.contains("degeneracy")) {
    const json& d = j.at("degeneracy");
    reject_unknown(d, "degeneracy.", {"box_radius", "grid", "tol_row", "tol_det", "n_tries", "margin"});
    DegeneracyBlock blk;
    blk.box_radius = num_or(d, "degeneracy.", "box_radius", 3.0);
    blk.grid = static_cast<int>(num_or(d, "degeneracy.", "grid", 41));
    blk.tol_row = num_or(d, "degeneracy.", "tol_row", 1e-10);
    blk.tol_det = num_or(d, "degeneracy.", "tol_det", 1e-10);
    blk.n_tries = static_cast<int>(num_or(d, "degeneracy.", "n_tries", 1000));
    blk.margin = num_or(d, "degeneracy.", "margin", 0.05);
    cfg.degeneracy = blk;
  }
  if (j.contains("control")) {
    const json& d = j.at("control");
    reject_unknown(d, "control.", {"n_plans", "tol", "dt", "box_radius", "n_tries", "margin"});
    ControlBlock blk;
    blk.n_plans = static_cast<int>(num_or(d, "control.", "n_plans", 50));
    blk.tol = num_or(d, "control.", "tol", 1e-4);
    blk.dt = num_or(d, "control.", "dt", 0.0);
    blk.box_radius = num_or(d, "control.", "box_radius", 2.0);
    blk.n_tries = static_cast<int>(num_or(d, "control.", "n_tries", 1000));
    blk.margin = num_or(d, "control.", "margin", 0.05);
    cfg.control = blk;
  }
  if (j.contains("ergodicity")) {
    const json& d = j.at("ergodicity");
    reject_unknown(d, "ergodicity.", {"n", "checkpoints", "n_projections", "point_start", "cloud_sd", "truncation_R"});
    ErgodicityBlock blk;
    blk.n = static_cast<int>(num_or(d, "ergodicity.", "n", 20000));
    blk.checkpoints = require(d, "ergodicity.", "checkpoints").get<Vec>();
    blk.n_projections = static_cast<int>(num_or(d, "ergodicity.", "n_projections", 64));
    blk.point_start = init_from(require(d, "ergodicity.", "point_start"), "ergodicity.point_start.");
    blk.cloud_sd = num_or(d, "ergodicity.", "cloud_sd", 2.0);
    if (d.contains("truncation_R")) blk.truncation_R = d.at("truncation_R").get<Vec>();
    cfg.ergodicity = blk;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["version"] = cfg.version;
  j["seed"] = cfg.seed;
  j["objective"] = cfg.objective;
  j["hp"] = {{"a", cfg.hp.a}, {"b", cfg.hp.b}, {"gamma", cfg.hp.gamma}, {"sigma", cfg.hp.sigma}, {"eps", cfg.hp.eps}};
  if (cfg.discrete) {
    j["discrete"] = {{"h", cfg.discrete->h},
                     {"steps", cfg.discrete->steps},
                     {"noise_mode", noise_mode_str(cfg.discrete->noise_mode)},
                     {"init", state_json(cfg.discrete->init)}};
  }
  if (cfg.sde) {
    j["sde"] = {{"system", cfg.sde->system == SystemKind::homogeneous ? "homogeneous" : "inhomogeneous"},
                {"integrator", cfg.sde->integrator == Integrator::exp_y ? "exp_y" : "euler_maruyama"},
                {"dt", cfg.sde->dt},
                {"horizon", cfg.sde->horizon},
                {"delta_start", cfg.sde->delta_start},
                {"init", state_json(cfg.sde->init)}};
  }
  if (cfg.limit_check) {
    j["limit_check"] = {{"h_grid", cfg.limit_check->h_grid},     {"h_ref", cfg.limit_check->h_ref},
                        {"n", cfg.limit_check->n},               {"horizon", cfg.limit_check->horizon},
                        {"delta", cfg.limit_check->delta},       {"noise_mode", noise_mode_str(cfg.limit_check->noise_mode)},
                        {"init", state_json(cfg.limit_check->init)}};
  }
  if (cfg.lyapunov) {
    j["lyapunov"] = {{"safety", cfg.lyapunov->safety},
                     {"box_radius", cfg.lyapunov->box_radius},
                     {"n", cfg.lyapunov->n},
                     {"eta", cfg.lyapunov->eta},
                     {"upsilons", cfg.lyapunov->upsilons}};
  }
  if (cfg.degeneracy) {
    j["degeneracy"] = {{"box_radius", cfg.degeneracy->box_radius}, {"grid", cfg.degeneracy->grid},
                       {"tol_row", cfg.degeneracy->tol_row},       {"tol_det", cfg.degeneracy->tol_det},
                       {"n_tries", cfg.degeneracy->n_tries},       {"margin", cfg.degeneracy->margin}};
  }
  if (cfg.control) {
    j["control"] = {{"n_plans", cfg.control->n_plans}, {"tol", cfg.control->tol},
                    {"dt", cfg.control->dt},           {"box_radius", cfg.control->box_radius},
                    {"n_tries", cfg.control->n_tries}, {"margin", cfg.control->margin}};
  }
  if (cfg.ergodicity) {
    j["ergodicity"] = {{"n", cfg.ergodicity->n},
                       {"checkpoints", cfg.ergodicity->checkpoints},
                       {"n_projections", cfg.ergodicity->n_projections},
                       {"point_start", state_json(cfg.ergodicity->point_start)},
                       {"cloud_sd", cfg.ergodicity->cloud_sd},
                       {"truncation_R", cfg.ergodicity->truncation_R}};
  }
  return j;
}

json objective_to_json(const Objective& obj) {
  json j;
  j["kind"] = obj.kind();
  j["dim"] = obj.dim();
  return j;
}

}  // namespace adamlab
