#pragma once

#include <filesystem>
#include <string>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/control.hpp"
#include "adamlab/degeneracy.hpp"
#include "adamlab/ergodicity.hpp"
#include "adamlab/generator.hpp"
#include "adamlab/lyapunov.hpp"
#include "adamlab/measure.hpp"
#include "adamlab/sde.hpp"

#include "json.hpp"

namespace adamlab {

using json = nlohmann::json;

/// "t, x_1..x_m, z_1..z_m, y_1..y_m" rows; shared by discrete traces and trajectories.
void write_trace_csv(const std::filesystem::path& path, const Vec& times, const std::vector<State>& states);

/// Ensemble rows "x_1..x_m, z_1..z_m, y_1..y_m" plus a JSON column manifest alongside.
void write_ensemble_csv(const std::filesystem::path& csv_path, const EmpiricalMeasure& ens);

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceCurve& curve);
json convergence_fit_json(const ConvergenceCurve& curve);

void write_control_csv(const std::filesystem::path& path, const SkeletonControl& control);
json plan_json(const ControlPlan& plan);

json drift_report_json(const DriftReport& rep, const LyapunovParams& p);
json residual_report_json(std::span<const ResidualEntry> entries);
json certificate_json(const RegularPointCertificate& cert);

json state_json(const State& s);
State state_from_json(const json& j);

std::string format_double(double v);  // shortest round-trip formatting

/// FNV-1a over the canonical (sorted-key) dump; stable across runs.
std::string config_hash(const json& config);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace adamlab
