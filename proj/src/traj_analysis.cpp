#include "poolsim/traj_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "poolsim/engulf.hpp"

namespace poolsim {

StallParams StallParams::from_alpha(double alpha, double T0) {
  StallParams p;
  p.alpha = alpha;
  p.beta = 1.0 / (12.0 * (1.0 - alpha / 2.0));
  p.T0 = T0;
  p.validate();
  return p;
}

void StallParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("stall alpha must be in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("stall beta must be in (0, 1)");
  if (!(T0 >= 0.0)) throw std::invalid_argument("stall T0 must be >= 0");
}

bool stall_holds(const Trajectory& traj, double t1, double beta) {
  const double s = t1 - std::pow(t1, beta);
  if (traj.events.empty() || s < traj.events.front().time) return false;
  return traj.radius_at(s) >= traj.radius_at(t1) - 2.0;
}

std::vector<double> stall_grid(const Trajectory& traj, double T0) {
  std::vector<double> grid;
  for (const auto& e : traj.events) {
    if (e.time > T0 && e.time <= traj.horizon) grid.push_back(e.time);
  }
  for (double k = std::floor(T0) + 1.0; k <= traj.horizon; k += 1.0) grid.push_back(k);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::optional<double> find_stall(const Trajectory& traj, const StallParams& params) {
  params.validate();
  if (params.T0 > traj.horizon) {
    throw std::invalid_argument("find_stall: T0 lies beyond the trajectory horizon");
  }
  for (double t1 : stall_grid(traj, params.T0)) {
    if (stall_holds(traj, t1, params.beta)) return t1;
  }
  return std::nullopt;
}

StatReport mass_audit(const Trajectory& traj) {
  StatReport r;
  r.name = "mass_audit";
  r.n_samples = traj.events.size();
  std::uint64_t cumulative = 1;
  std::uint64_t bad = 0;
  nlohmann::json issues = nlohmann::json::array();
  auto flag = [&](std::size_t i, const char* what) {
    ++bad;
    if (issues.size() < 20) issues.push_back({{"event", i}, {"issue", what}});
  };
  for (std::size_t i = 0; i < traj.events.size(); ++i) {
    const auto& e = traj.events[i];
    cumulative += e.absorbed();
    if (e.mass_after != cumulative) flag(i, "mass differs from 1 + absorbed count");
    if (e.mass_after == 0 || e.radius_after != radius_from_mass(e.mass_after)) {
      flag(i, "radius differs from sqrt(mass / pi)");
    } else if (std::abs(kPi * e.radius_after * e.radius_after - static_cast<double>(e.mass_after)) >
               1e-9 * static_cast<double>(e.mass_after)) {
      flag(i, "pi r^2 differs from mass");
    }
    if (i > 0) {
      if (!(e.time > traj.events[i - 1].time)) flag(i, "time not strictly increasing");
      if (e.mass_after < traj.events[i - 1].mass_after) flag(i, "mass decreased");
    }
  }
  r.estimate = r.ci_low = r.ci_high = static_cast<double>(bad);
  r.details["discrepancies"] = bad;
  r.details["issues"] = issues;
  if (!issues.empty()) r.details["first_bad_event"] = issues.front().at("event");
  r.verdict = bad == 0 ? Verdict::pass : Verdict::fail;
  return r;
}

double radius_quantile(std::span<const Trajectory> trajs, double t, double p) {
  if (trajs.empty()) throw std::invalid_argument("radius_quantile needs at least one trajectory");
  std::vector<double> v;
  v.reserve(trajs.size());
  for (const auto& tr : trajs) v.push_back(tr.radius_at(t));
  return quantile(std::move(v), p);
}

std::vector<QuantileRow> ensemble_quantiles(std::span<const Trajectory> trajs,
                                            std::span<const double> times) {
  if (trajs.empty()) throw std::invalid_argument("ensemble_quantiles needs at least one trajectory");
  std::vector<QuantileRow> rows;
  rows.reserve(times.size());
  std::vector<double> v(trajs.size());
  for (double t : times) {
    for (std::size_t i = 0; i < trajs.size(); ++i) v[i] = trajs[i].radius_at(t);
    std::sort(v.begin(), v.end());
    rows.push_back({t, quantile_sorted(v, 0.1), quantile_sorted(v, 0.5), quantile_sorted(v, 0.9),
                    v.front(), v.back()});
  }
  return rows;
}

}  // namespace poolsim
