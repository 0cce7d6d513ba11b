#include "poolsim/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace poolsim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::initial_cascade: return "initial-cascade";
    case EventKind::arrival: return "arrival";
    case EventKind::cap_hit: return "cap-hit";
    case EventKind::boundary_hit: return "boundary-hit";
  }
  return "unknown";
}

EventKind parse_event_kind(std::string_view name) {
  if (name == "initial-cascade") return EventKind::initial_cascade;
  if (name == "arrival") return EventKind::arrival;
  if (name == "cap-hit") return EventKind::cap_hit;
  if (name == "boundary-hit" || name == "boundary_hit") return EventKind::boundary_hit;
  throw std::invalid_argument("unknown event kind '" + std::string(name) + "'");
}

std::uint64_t TrajectoryEvent::absorbed() const {
  return arrivals + std::accumulate(rounds.begin(), rounds.end(), std::uint64_t{0});
}

namespace {
std::size_t event_index_at(const std::vector<TrajectoryEvent>& events, double t) {
  if (events.empty() || t < events.front().time) {
    throw std::out_of_range("trajectory evaluated before its first event");
  }
  auto it = std::upper_bound(events.begin(), events.end(), t,
                             [](double v, const TrajectoryEvent& e) { return v < e.time; });
  return static_cast<std::size_t>(std::distance(events.begin(), it)) - 1;
}
}  // namespace

double Trajectory::radius_at(double t) const { return events[event_index_at(events, t)].radius_after; }

std::uint64_t Trajectory::mass_at(double t) const {
  return events[event_index_at(events, t)].mass_after;
}

double Trajectory::final_radius() const {
  if (events.empty()) throw std::out_of_range("empty trajectory");
  return events.back().radius_after;
}

std::uint64_t Trajectory::final_mass() const {
  if (events.empty()) throw std::out_of_range("empty trajectory");
  return events.back().mass_after;
}

Trajectory make_step_trajectory(std::span<const double> times, std::span<const double> radii,
                                double horizon) {
  if (times.size() != radii.size() || times.empty()) {
    throw std::invalid_argument("step trajectory needs equally sized, non-empty samples");
  }
  Trajectory traj;
  traj.horizon = horizon;
  traj.info.engine = "synthetic";
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::invalid_argument("step trajectory times must be strictly increasing");
    }
    TrajectoryEvent ev;
    ev.time = times[i];
    ev.kind = i == 0 ? EventKind::initial_cascade : EventKind::arrival;
    ev.radius_after = radii[i];
    const double m = std::round(std::numbers::pi * radii[i] * radii[i]);
    ev.mass_after = m < 1.0 ? 1 : static_cast<std::uint64_t>(m);
    traj.events.push_back(std::move(ev));
  }
  return traj;
}

}  // namespace poolsim
