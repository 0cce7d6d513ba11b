#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "poolsim/engulf.hpp"
#include "poolsim/exact_engine.hpp"
#include "poolsim/traj_analysis.hpp"

using namespace poolsim;

namespace {

Trajectory power_path(double expo, double step, double horizon) {
  std::vector<double> t, r;
  for (int i = 0; i * step <= horizon + 1e-9; ++i) {
    t.push_back(i * step);
    r.push_back(std::max(std::pow(i * step, expo), 0.6));
  }
  return make_step_trajectory(t, r, horizon);
}

// Independent step-function lookup and scan.
double step_value(const std::vector<double>& t, const std::vector<double>& r, double x) {
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  return r[static_cast<std::size_t>(it - t.begin()) - 1];
}

std::optional<double> brute_stall(const Trajectory& tr, double T0, double beta) {
  std::vector<double> t, r;
  for (const auto& e : tr.events) {
    t.push_back(e.time);
    r.push_back(e.radius_after);
  }
  std::vector<double> cand;
  for (double x : t) {
    if (x > T0 && x <= tr.horizon) cand.push_back(x);
  }
  for (int k = 0; k <= static_cast<int>(tr.horizon); ++k) {
    if (k > T0) cand.push_back(k);
  }
  std::sort(cand.begin(), cand.end());
  for (double t1 : cand) {
    const double s = t1 - std::pow(t1, beta);
    if (s < t.front()) continue;
    if (step_value(t, r, s) >= step_value(t, r, t1) - 2.0) return t1;
  }
  return std::nullopt;
}

Trajectory constant_path(double radius, double horizon) {
  const std::vector<double> t{0.0}, r{radius};
  return make_step_trajectory(t, r, horizon);
}

}  // namespace

TEST_CASE("stall parameters") {
  const auto p = StallParams::from_alpha(0.5, 10);
  CHECK(p.beta == doctest::Approx(1.0 / 9.0));
  CHECK(StallParams::from_alpha(0.4, 0).beta == doctest::Approx(1.0 / 9.6));
  StallParams bad;
  bad.beta = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("find_stall on a t^0.6 path matches the brute-force scan") {
  const auto tr = power_path(0.6, 0.1, 2000.0);
  StallParams p;
  p.alpha = 0.4;
  p.beta = 1.0 / 9.6;
  p.T0 = 100;
  const auto got = find_stall(tr, p);
  const auto want = brute_stall(tr, p.T0, p.beta);
  REQUIRE(got.has_value());
  REQUIRE(want.has_value());
  CHECK(*got == *want);
  CHECK(*got > 100);
  CHECK(stall_holds(tr, *got, p.beta));
}

TEST_CASE("find_stall on a constant path returns the first grid point") {
  const auto tr = constant_path(1.0, 50.0);
  StallParams p;
  p.T0 = 1.0;
  const auto got = find_stall(tr, p);
  REQUIRE(got.has_value());
  CHECK(*got == 2.0);
  p.T0 = 60;
  CHECK_THROWS_AS(find_stall(tr, p), std::invalid_argument);
}

TEST_CASE("find_stall on a linear path self-verifies") {
  const auto tr = power_path(1.0, 0.5, 1000.0);
  StallParams p;
  p.beta = 0.1;
  p.T0 = 1.0;
  const auto got = find_stall(tr, p);
  REQUIRE(got.has_value());
  CHECK(stall_holds(tr, *got, 0.1));
  CHECK(brute_stall(tr, 1.0, 0.1) == got);
}

TEST_CASE("find_stall is monotone in T0") {
  ExactConfig c;
  c.lambda = 0.5;
  c.horizon = 200;
  c.sim_radius = 40;
  c.target_radius_hint = 10;
  c.master_seed = 71;
  const auto tr = run_exact(c);
  StallParams p;
  p.beta = 0.3;
  double prev = 0.0;
  for (double T0 = 0; T0 <= 190; T0 += 10) {
    p.T0 = T0;
    const auto got = find_stall(tr, p);
    if (!got) break;
    CHECK(*got >= prev);
    CHECK(stall_holds(tr, *got, p.beta));
    CHECK(brute_stall(tr, T0, p.beta) == got);
    prev = *got;
  }
}

TEST_CASE("mass audit") {
  ExactConfig c;
  c.lambda = 1.0;
  c.horizon = 5;
  c.sim_radius = 15;
  c.target_radius_hint = 3;
  c.master_seed = 72;
  auto tr = run_exact(c);
  CHECK(mass_audit(tr).verdict == Verdict::pass);
  CHECK(mass_audit(tr).details["discrepancies"].get<int>() == 0);
  REQUIRE(tr.events.size() > 3);
  tr.events[2].mass_after += 1;
  const auto bad = mass_audit(tr);
  CHECK(bad.verdict == Verdict::fail);
  CHECK(bad.details["first_bad_event"].get<int>() == 2);
}

TEST_CASE("ensemble quantiles") {
  std::vector<Trajectory> two{constant_path(1.0, 10), constant_path(3.0, 10)};
  const std::vector<double> grid{0, 2.5, 5, 10};
  for (const auto& row : ensemble_quantiles(two, grid)) {
    CHECK(row.q50 == 2.0);
    CHECK(row.min == 1.0);
    CHECK(row.max == 3.0);
  }
  CHECK(radius_quantile(two, 3.0, 0.0) == 1.0);
  CHECK(radius_quantile(two, 3.0, 1.0) == 3.0);

  const auto one = power_path(0.5, 1.0, 20);
  const std::vector<Trajectory> single{one};
  const std::vector<double> g2{0.5, 3, 7.2, 19};
  for (const auto& row : ensemble_quantiles(single, g2)) {
    const double v = one.radius_at(row.time);
    CHECK(row.q10 == v);
    CHECK(row.q50 == v);
    CHECK(row.q90 == v);
  }
  CHECK_THROWS_AS(ensemble_quantiles(std::vector<Trajectory>{}, grid), std::invalid_argument);
}

TEST_CASE("median of monotone paths is monotone") {
  std::vector<Trajectory> trajs;
  for (std::uint64_t s = 0; s < 9; ++s) {
    ExactConfig c;
    c.lambda = 0.8;
    c.horizon = 20;
    c.sim_radius = 25;
    c.target_radius_hint = 5;
    c.master_seed = 73;
    c.stream_index = s;
    trajs.push_back(run_exact(c));
  }
  std::vector<double> grid;
  for (double t = 0; t <= 20; t += 0.25) grid.push_back(t);
  const auto rows = ensemble_quantiles(trajs, grid);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].q50 >= rows[i - 1].q50);
}

TEST_CASE("radius_at is right-continuous") {
  const std::vector<double> t{0, 1, 2}, r{1, 2, 3};
  const auto tr = make_step_trajectory(t, r, 3);
  CHECK(tr.radius_at(0.999) == 1);
  CHECK(tr.radius_at(1.0) == 2);
  CHECK(tr.radius_at(5.0) == 3);
  CHECK_THROWS_AS(tr.radius_at(-0.1), std::out_of_range);
}
