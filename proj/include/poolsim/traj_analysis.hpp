// Deterministic analysis of radius trajectories.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "poolsim/stats.hpp"
#include "poolsim/trajectory.hpp"

namespace poolsim {

struct StallParams {
  double alpha = 0.5;
  double beta = 1.0 / 9.0;
  double T0 = 0.0;

  /// beta = 1 / (12 (1 - alpha / 2)).
  static StallParams from_alpha(double alpha, double T0);
  void validate() const;
};

/// True iff E(t1 - t1^beta) >= E(t1) - 2 on the trajectory's step function.
/// False when t1 - t1^beta falls before the first event.
bool stall_holds(const Trajectory& traj, double t1, double beta);

/// First t1 > T0 on the grid (event times and integers up to the horizon)
/// at which the stall inequality holds. Throws std::invalid_argument if T0
/// lies beyond the horizon.
std::optional<double> find_stall(const Trajectory& traj, const StallParams& params);

/// The scan grid used by find_stall: event times and integer times in
/// (T0, horizon], ascending, without duplicates.
std::vector<double> stall_grid(const Trajectory& traj, double T0);

/// Checks mass_after = 1 + cumulative absorbed count, radius_after =
/// sqrt(mass_after / pi), strictly increasing times and nondecreasing mass.
StatReport mass_audit(const Trajectory& traj);

struct QuantileRow {
  double time = 0.0;
  double q10 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Pointwise radius quantile across trajectories at time t.
double radius_quantile(std::span<const Trajectory> trajs, double t, double p);

/// Per-time q10 / median / q90 / min / max of the radius across trajectories.
std::vector<QuantileRow> ensemble_quantiles(std::span<const Trajectory> trajs,
                                            std::span<const double> times);

}  // namespace poolsim
