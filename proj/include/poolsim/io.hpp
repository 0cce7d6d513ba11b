// Trajectory and report serialisation.
//
// CSV columns: time,kind,mass,radius,rounds,flag. Doubles are written in the
// shortest form that round-trips; rounds are ';'-separated. The arrival
// count of an event is not a column: it is recovered as the mass increment
// minus the cascade rounds.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "poolsim/stats.hpp"
#include "poolsim/traj_analysis.hpp"
#include "poolsim/trajectory.hpp"

namespace poolsim {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string trajectory_to_csv(const Trajectory& traj);
/// Throws std::runtime_error naming the offending line on malformed input.
Trajectory trajectory_from_csv(std::string_view text);

std::string trajectory_to_jsonl(const Trajectory& traj);
Trajectory trajectory_from_jsonl(std::string_view text);

nlohmann::json event_to_json(const TrajectoryEvent& e);
TrajectoryEvent event_from_json(const nlohmann::json& j);

std::string quantiles_to_csv(const std::vector<QuantileRow>& rows);

/// Writes `content` to `path`, creating parent directories. Failures raise
/// std::runtime_error carrying the path.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace poolsim
