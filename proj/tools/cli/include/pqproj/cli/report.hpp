#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "pqproj/cli/scene_io.hpp"
#include "pqproj/integrals.hpp"
#include "pqproj/spectra.hpp"

namespace pqproj::cli {

std::string tool_version();

/// tool, version, command, scene {name, digest}, seed; thresholds and results are added by the caller.
Json report_header(const std::string& command, const SceneSpec& spec, std::optional<std::uint64_t> seed);

/// Adds exit_code and the wall_clock object (timestamp, elapsed seconds). wall_clock is
/// the only part of a report that differs between identical runs.
void finish_report(Json& report, int exit_code, std::chrono::steady_clock::time_point started);

Json to_json(const Vector& v);
Json to_json(const ValidationResult& r);
Json to_json(const ResidualReport& r);
Json to_json(const EigenvectorLemmaReport& r);
Json to_json(const DimensionLemmaReport& r);
Json to_json(const Classification& c);
Json to_json(const ConservationReport& r);
Json to_json(const ApproachProbe& p);

/// Header t,x1..xm,v1..vm followed by one column per name; one row per sample.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& column_names,
                           const std::vector<std::vector<double>>& columns);

}  // namespace pqproj::cli
