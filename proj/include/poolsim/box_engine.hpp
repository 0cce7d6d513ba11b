// Time-stepped pool simulation in a periodic square box.
//
// The box is the canonical square [-L/2, L/2)^2 with the pool centred at the
// origin. Each step of length dt moves every active particle and then
// engulfs, so an entry is only noticed at the end of the step.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poolsim/engulf.hpp"
#include "poolsim/geomfield.hpp"
#include "poolsim/trajectory.hpp"

namespace poolsim {

enum class Kinematics { random_walk, brownian };

std::string_view to_string(Kinematics k);
Kinematics parse_kinematics(std::string_view name);

struct BoxConfig {
  double lambda = 1.0;
  double box_side = 800.0;
  double dt = 0.01;
  double horizon = 100.0;
  Kinematics kinematics = Kinematics::random_walk;
  std::uint64_t cap = 10'000'000;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  /// Post-sweep emptiness check on every event (O(n) per event).
  bool audit = false;

  [[nodiscard]] std::vector<std::string> violations() const;
  void validate() const;
  /// Number of whole steps that fit in the horizon.
  [[nodiscard]] std::uint64_t step_count() const;
  /// Largest mass whose radius stays within box_side / 2.
  [[nodiscard]] std::uint64_t ceiling_mass() const;
};

struct BoxState {
  std::uint64_t step = 0;
  double time = 0.0;
  std::uint64_t mass = 1;
  std::uint64_t released = 0;
  std::vector<Point2> pos;
  std::vector<std::uint8_t> alive;
  /// Active ids; order is part of the state (it drives random-walk selection).
  std::vector<std::uint32_t> active;
  std::vector<std::uint32_t> slot;
  RadialIndex index;
  /// Ids the next sweep must examine: moved (Brownian mode), landed inside
  /// the pool (random-walk mode) or injected.
  std::vector<std::uint32_t> pending;
  std::optional<JumpCountTable> jumps;
  bool stopped = false;
  Trajectory traj;

  [[nodiscard]] std::size_t active_count() const { return active.size(); }
  [[nodiscard]] double radius() const { return radius_from_mass(mass); }
};

/// Samples the box field and applies the time-0 cascade.
BoxState init_box(const BoxConfig& cfg);
BoxState init_box_with_field(const BoxConfig& cfg, std::vector<Point2> field);

/// Adds an active particle at p (wrapped into the box). It is examined by
/// the next sweep.
std::uint32_t inject_particle(BoxState& state, const BoxConfig& cfg, Point2 p);

/// Move half of a step: advances the clock by dt and displaces particles.
/// Brownian mode is parallel unless `parallel` is false; both paths draw
/// from per-(step, particle) streams and produce identical states.
void box_move(BoxState& state, const BoxConfig& cfg, bool parallel = true);

/// Engulf half of a step: absorbs pending particles that sit inside the
/// pool, then cascades. Records an event if the mass changed.
void box_sweep(BoxState& state, const BoxConfig& cfg);

/// One full step (move then sweep). No-op once the run has stopped.
void box_step(BoxState& state, const BoxConfig& cfg, bool parallel = true);

Trajectory run_box(const BoxConfig& cfg, bool parallel = true);

}  // namespace poolsim
