// Pool radius trajectories: right-continuous step functions annotated with
// the cascade that produced each jump.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace poolsim {

enum class EventKind { initial_cascade, arrival, cap_hit, boundary_hit };

std::string_view to_string(EventKind kind);
/// Throws std::invalid_argument for unknown names.
EventKind parse_event_kind(std::string_view name);

struct TrajectoryEvent {
  double time = 0.0;
  EventKind kind = EventKind::initial_cascade;
  std::uint64_t mass_after = 1;
  double radius_after = 0.0;
  /// Particles released before the cascade started (the arriving walkers).
  std::uint64_t arrivals = 0;
  /// Per-round absorbed counts of the cascade that followed.
  std::vector<std::uint64_t> rounds;
  /// Set on the event that tripped the cap or hit the box boundary.
  bool flag = false;

  [[nodiscard]] std::uint64_t absorbed() const;
  friend bool operator==(const TrajectoryEvent&, const TrajectoryEvent&) = default;
};

struct TrajectoryInfo {
  std::string engine;
  double truncation_bound = 0.0;
  bool hint_exceeded = false;
  std::uint64_t initial_particles = 0;
  std::uint64_t released = 0;
  std::uint64_t remaining_active = 0;
  std::uint64_t events_processed = 0;
  /// Events after which the no-active-particle-inside-the-pool check ran.
  std::uint64_t audited_events = 0;
};

struct Trajectory {
  std::vector<TrajectoryEvent> events;
  std::optional<double> exploded_at;
  double horizon = 0.0;
  TrajectoryInfo info;

  /// Value of the right-continuous radius path at time t (last event at or
  /// before t). Throws std::out_of_range before the first event.
  [[nodiscard]] double radius_at(double t) const;
  [[nodiscard]] std::uint64_t mass_at(double t) const;
  [[nodiscard]] double final_radius() const;
  [[nodiscard]] std::uint64_t final_mass() const;
};

/// Builds a step-function trajectory directly from (time, radius) samples.
/// Used for synthetic paths in analysis; mass is the nearest integer to
/// pi * r^2 (at least 1).
Trajectory make_step_trajectory(std::span<const double> times, std::span<const double> radii,
                                double horizon);

}  // namespace poolsim
