#include "adamlab/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace adamlab {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

namespace {

std::string state_header(int m) {
  std::string h = "t";
  for (const char* block : {"x", "z", "y"})
    for (int i = 1; i <= m; ++i) h += std::string(",") + block + "_" + std::to_string(i);
  return h;
}

void append_state(std::string& row, const State& s) {
  for (const auto* block : {&s.x, &s.z, &s.y})
    for (double v : *block) row += "," + format_double(v);
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const Vec& times, const std::vector<State>& states) {
  const int m = states.empty() ? 0 : states.front().dim();
  std::string text = state_header(m) + "\n";
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::string row = format_double(times[k]);
    append_state(row, states[k]);
    text += row + "\n";
  }
  write_text(path, text);
}

void write_ensemble_csv(const std::filesystem::path& csv_path, const EmpiricalMeasure& ens) {
  std::string header;
  for (const char* block : {"x", "z", "y"})
    for (int i = 1; i <= ens.m; ++i) header += std::string(header.empty() ? "" : ",") + block + "_" + std::to_string(i);
  std::string text = header + "\n";
  for (int i = 0; i < ens.n; ++i) {
    std::string row;
    const auto r = ens.row(i);
    for (int j = 0; j < ens.row_width(); ++j) row += (j ? "," : "") + format_double(r[j]);
    text += row + "\n";
  }
  write_text(csv_path, text);

  json manifest;
  manifest["version"] = "1";
  manifest["n"] = ens.n;
  manifest["dim"] = ens.m;
  manifest["time"] = ens.time;
  manifest["seed"] = ens.seed;
  manifest["provenance"] = ens.provenance;
  json cols = json::array();
  for (const char* block : {"x", "z", "y"})
    for (int i = 1; i <= ens.m; ++i) cols.push_back(std::string(block) + "_" + std::to_string(i));
  manifest["columns"] = cols;
  auto mpath = csv_path;
  mpath.replace_extension(".manifest.json");
  write_text(mpath, manifest.dump(2) + "\n");
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceCurve& curve) {
  std::string text = "t,distance,stderr\n";
  for (std::size_t c = 0; c < curve.times.size(); ++c)
    text += format_double(curve.times[c]) + "," + format_double(curve.distances[c]) + "," +
            format_double(curve.stderrs[c]) + "\n";
  write_text(path, text);
}

json convergence_fit_json(const ConvergenceCurve& curve) {
  return json{{"lambda_hat", curve.lambda_hat},
              {"intercept", curve.intercept},
              {"r2", curve.r2},
              {"window", {curve.fit_lo, curve.fit_hi}},
              {"decaying", curve.decaying}};
}

void write_control_csv(const std::filesystem::path& path, const SkeletonControl& control) {
  const int m = control.values.empty() ? 0 : static_cast<int>(control.values.front().size());
  std::string header = "t";
  for (int i = 1; i <= m; ++i) header += ",h_" + std::to_string(i);
  std::string text = header + "\n";
  for (std::size_t k = 0; k < control.times.size(); ++k) {
    std::string row = format_double(control.times[k]);
    for (double v : control.values[k]) row += "," + format_double(v);
    text += row + "\n";
  }
  write_text(path, text);
}

json state_json(const State& s) { return json{{"x", s.x}, {"z", s.z}, {"y", s.y}}; }

State state_from_json(const json& j) {
  State s;
  s.x = j.at("x").get<Vec>();
  s.z = j.at("z").get<Vec>();
  s.y = j.at("y").get<Vec>();
  if (s.x.size() != s.z.size() || s.x.size() != s.y.size())
    throw std::invalid_argument("state: x, z, y must share one dimension");
  return s;
}

json plan_json(const ControlPlan& plan) {
  return json{{"stages", {{"t1", plan.t1}, {"S", plan.big_s}, {"delta_f", plan.delta_f}, {"dt", plan.dt}}},
              {"x_c", plan.x_c},
              {"alpha_star", plan.alpha_star},
              {"start", state_json(plan.start)},
              {"target", state_json(plan.target)},
              {"analytic_end", state_json(plan.analytic_end)},
              {"replay_end", state_json(plan.replay_end)},
              {"analytic_error", plan.analytic_error},
              {"replay_error", plan.replay_error},
              {"max_excursion_stage3", plan.max_excursion_stage3},
              {"max_excursion", plan.max_excursion},
              {"success", plan.success}};
}

json drift_report_json(const DriftReport& rep, const LyapunovParams& p) {
  json violations = json::array();
  for (const auto& v : rep.violations)
    violations.push_back(json{{"state", state_json(v.state)}, {"LV", v.lv}, {"V", v.v}, {"outside", v.outside}});
  return json{{"n", rep.n},
              {"n_outside", rep.n_outside},
              {"violation_count", rep.violation_count},
              {"violations", violations},
              {"max_outside_slack", rep.max_outside_slack},
              {"max_inside_slack", rep.max_inside_slack},
              {"lambda", rep.lambda},
              {"K", rep.big_k},
              {"M", rep.level_m},
              {"params",
               {{"theta", p.theta},
                {"beta", p.beta},
                {"delta_y", p.delta_y},
                {"upsilon", p.upsilon},
                {"shift", p.shift},
                {"c1_upper", p.c1_upper},
                {"c2_upper", p.c2_upper},
                {"c1_lower", p.c1_lower},
                {"c2_lower", p.c2_lower}}}};
}

json residual_report_json(std::span<const ResidualEntry> entries) {
  json out = json::array();
  for (const auto& e : entries)
    out.push_back(json{{"phi_name", e.phi}, {"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}});
  return out;
}

json certificate_json(const RegularPointCertificate& cert) {
  return json{{"x_star", cert.x_star},
              {"radius", cert.radius},
              {"margin", cert.margin},
              {"grid_min", cert.grid_min},
              {"grid_per_dim", cert.grid_per_dim}};
}

std::string config_hash(const json& config) {
  const std::string dump = config.dump();  // nlohmann dumps objects with sorted keys
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace adamlab
