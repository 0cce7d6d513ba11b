// Acceptance runs. One line per criterion:
//   criterion <n> PASS|FAIL <title>: <measured values>
// Tolerances are fixed below. `--criterion N` (repeatable) selects runs.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "poolsim/box_engine.hpp"
#include "poolsim/branching.hpp"
#include "poolsim/config.hpp"
#include "poolsim/engulf.hpp"
#include "poolsim/ensemble.hpp"
#include "poolsim/estimators.hpp"
#include "poolsim/exact_engine.hpp"
#include "poolsim/io.hpp"
#include "poolsim/stats.hpp"
#include "poolsim/traj_analysis.hpp"

using namespace poolsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
};

class Notes {
 public:
  template <typename T>
  Notes& add(const std::string& key, const T& v) {
    if (!first_) out_ << ", ";
    first_ = false;
    out_ << key << "=" << v;
    return *this;
  }
  [[nodiscard]] std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

// Poisson(1) Galton-Watson: probability that the whole tree has n nodes,
// by walking every depth-first offspring sequence.
double tree_probability(int n) {
  std::function<double(int, int)> rec = [&](int placed, int open) -> double {
    if (open == 0) return placed == n ? 1.0 : 0.0;
    if (placed == n) return 0.0;
    double s = 0.0;
    for (int c = 0; placed + open + c <= n; ++c) {
      s += std::exp(-1.0) / std::tgamma(c + 1.0) * rec(placed + 1, open - 1 + c);
    }
    return s;
  };
  return rec(0, 1);
}

// Wilson score interval for k successes in n trials.
std::pair<double, double> wilson(std::uint64_t k, std::uint64_t n, double z = 1.96) {
  const double p = static_cast<double>(k) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double d = 1 + z * z / nn;
  const double c = (p + z * z / (2 * nn)) / d;
  const double h = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / d;
  return {c - h, c + h};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("poolsim-acceptance-" + name);
  fs::remove_all(p);
  return p;
}

// ---------------------------------------------------------------------------

Outcome cascade_law() {
  constexpr double kP0Tol = 0.005, kP1Tol = 0.004, kMinP = 0.001;
  CascadeLawParams p;
  p.lambda = 1.0;
  p.replicas = 100'000;
  const auto rep = cascade_law_test(p, RngStream(1001, 0));
  // Class probabilities from tree enumeration: added mass n has the law of
  // (tree size - 1).
  std::vector<double> probs(5);
  double acc = 0;
  for (int n = 0; n < 4; ++n) acc += probs[n] = tree_probability(n + 1);
  probs[4] = 1 - acc;
  const auto obs = rep.details["observed"].get<std::vector<std::uint64_t>>();
  const double N = static_cast<double>(p.replicas);
  const double f0 = obs[0] / N, f1 = obs[1] / N;
  const double pv = chi_square_gof_pvalue(obs, probs);
  const bool ok = std::abs(f0 - std::exp(-1.0)) <= kP0Tol && std::abs(f1 - std::exp(-2.0)) <= kP1Tol &&
                  pv > kMinP;
  Notes n;
  n.add("P(0)", fmt(f0)).add("e^-1", fmt(std::exp(-1.0))).add("P(1)", fmt(f1));
  n.add("e^-2", fmt(std::exp(-2.0))).add("chi2_p", fmt(pv, 4)).add("library_verdict", to_string(rep.verdict));
  return {ok, n.str()};
}

Outcome borel_oracle() {
  constexpr double kPmfTol = 1e-12, kSlope = -0.5, kSlopeTol = 0.1;
  double worst = 0;
  for (int n = 1; n <= 6; ++n) worst = std::max(worst, std::abs(borel_pmf(n) - tree_probability(n)));
  RngStream r(1002, 0);
  std::vector<double> s(1'000'000);
  for (auto& x : s) x = static_cast<double>(sample_borel(1.0, r));
  TailFitParams tp;
  tp.expected_slope = kSlope;
  tp.tol = kSlopeTol;
  const auto fit = cascade_tail_fit(s, tp);
  const bool ok = worst <= kPmfTol && std::abs(fit.estimate - kSlope) <= kSlopeTol &&
                  fit.verdict == Verdict::pass;
  Notes n;
  n.add("max_pmf_error", fmt(worst, 3)).add("tail_slope", fmt(fit.estimate, 4));
  n.add("fit_window_max", fit.details.value("n_max", 0.0));
  return {ok, n.str()};
}

Outcome extinction() {
  constexpr double kQTol = 1e-6, kBoundTol = 1e-5;
  // Damped iteration q <- (q + exp(1.5 (q - 1))) / 2 from 0.
  double q = 0;
  for (int i = 0; i < 100000; ++i) q = 0.5 * (q + std::exp(1.5 * (q - 1)));
  const double got = extinction_prob(1.5);
  bool sub_ok = true;
  for (double lam : {0.1, 0.5, 0.9, 1.0}) sub_ok = sub_ok && extinction_prob(lam) == 1.0;
  const double b = survival_lower_bound(1.5);
  const double b_oracle = (1 - std::exp(-1.0)) * (1 - q);
  const bool ok = std::abs(got - q) <= kQTol && std::abs(got - 0.417188) <= kQTol && sub_ok &&
                  std::abs(b - b_oracle) <= kBoundTol;
  Notes n;
  n.add("q(1.5)", fmt(got, 9)).add("oracle", fmt(q, 9)).add("q(<=1)==1", sub_ok ? "yes" : "no");
  n.add("survival_bound(1.5)", fmt(b, 9)).add("oracle_bound", fmt(b_oracle, 9));
  return {ok, n.str()};
}

Outcome phase_transition() {
  constexpr double kSuperMin = 0.95, kCritMax = 0.05, kTruncTol = 1e-3;
  constexpr std::uint64_t kCap = 100'000;
  struct Arm {
    double lambda, horizon;
    std::uint64_t replicas;
  };
  Notes n;
  double frac[2] = {0, 0};
  int a = 0;
  for (const Arm arm : {Arm{1.5, 20.0, 100}, Arm{1.0, 100.0, 200}}) {
    ExactConfig c;
    c.lambda = arm.lambda;
    c.horizon = arm.horizon;
    c.cap = kCap;
    // The field must be able to feed the pool up to the cap: certify the
    // truncation for a pool as large as the cap mass.
    c.target_radius_hint = radius_from_mass(kCap);
    c.sim_radius = sim_radius_for_bound(c, kTruncTol);
    c.master_seed = 1004;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < arm.replicas; ++i) {
      c.stream_index = i;
      hits += run_exact(c).exploded_at.has_value() ? 1 : 0;
    }
    frac[a] = static_cast<double>(hits) / static_cast<double>(arm.replicas);
    const auto ci = wilson(hits, arm.replicas);
    const std::string tag = "lambda=" + fmt(arm.lambda);
    n.add(tag + " cap_hit_fraction", fmt(frac[a], 4));
    n.add("ci95", "[" + fmt(ci.first, 3) + "," + fmt(ci.second, 3) + "]");
    n.add("sim_radius", fmt(c.sim_radius, 5));
    ++a;
  }
  return {frac[0] >= kSuperMin && frac[1] <= kCritMax, n.str()};
}

Outcome growth() {
  constexpr double kSlopeLo = 0.4, kSlopeHi = 0.6, kTruncTol = 1e-3, kHint = 40.0;
  constexpr std::uint64_t kReplicas = 50;
  ExactConfig c;
  c.lambda = 0.5;
  c.horizon = 500;
  c.target_radius_hint = kHint;
  c.sim_radius = sim_radius_for_bound(c, kTruncTol);
  c.master_seed = 1005;
  const double bound = truncation_error_bound(c);
  std::vector<Trajectory> trajs;
  std::uint64_t over_hint = 0;
  for (std::uint64_t i = 0; i < kReplicas; ++i) {
    c.stream_index = i;
    trajs.push_back(run_exact(c));
    over_hint += trajs.back().final_radius() > kHint ? 1 : 0;
  }
  GrowthFitParams gp;
  gp.slope_lo = kSlopeLo;
  gp.slope_hi = kSlopeHi;
  std::vector<double> times, med;
  for (std::size_t k = 0; k < gp.points; ++k) {
    const double t = gp.t_min * std::pow(gp.t_max / gp.t_min, static_cast<double>(k) / (gp.points - 1));
    times.push_back(t);
    med.push_back(radius_quantile(trajs, t, 0.5));
  }
  const auto fit = growth_exponent_fit(times, med, gp);
  const bool ok = bound < kTruncTol && over_hint == 0 && fit.estimate >= kSlopeLo &&
                  fit.estimate <= kSlopeHi;
  Notes n;
  n.add("slope", fmt(fit.estimate, 4)).add("truncation_bound", fmt(bound, 3));
  n.add("sim_radius", fmt(c.sim_radius, 5)).add("replicas_over_hint", over_hint);
  n.add("median_radius(500)", fmt(med.back(), 4));
  return {ok, n.str()};
}

Outcome kurtz() {
  constexpr std::uint64_t kMinRetained = 10'000;
  KurtzParams p;
  p.lambda = 1.0;
  p.pool_radius = unit_ball_radius();
  p.t = 1.0;
  p.annuli = {Annulus(1, 2), Annulus(2, 3), Annulus(3, 4)};
  p.oracle_walkers = 100'000;
  const RngStream rng(1006, 0);
  // Pilot for the retention rate, then size the run so enough replicas
  // survive the conditioning.
  p.replicas = 2000;
  const auto pilot = kurtz_sample(p, rng.substream(StreamTag::oracle, 0));
  const double rate = std::max(0.01, static_cast<double>(pilot.counts.replicas()) / 2000.0);
  p.replicas = static_cast<std::uint64_t>(std::ceil(1.15 * kMinRetained / rate));
  StatReport rep;
  for (;;) {
    rep = kurtz_test(p, rng);
    if (rep.details.value("retained", std::uint64_t{0}) >= kMinRetained) break;
    p.replicas += p.replicas / 5;
  }
  bool fano_ok = true, mean_ok = true;
  Notes n;
  for (const auto& a : rep.details["annuli"]) {
    const double f = a["fano"].get<double>();
    fano_ok = fano_ok && f >= 0.9 && f <= 1.1;
    mean_ok = mean_ok && std::abs(a["z"].get<double>()) <= 3.0;
    n.add("fano(" + fmt(a["inner"].get<double>()) + "," + fmt(a["outer"].get<double>()) + ")",
          fmt(f, 4));
  }
  const double corr = rep.details["worst_abs_correlation"].get<double>();
  n.add("max|corr|", fmt(corr, 3)).add("retained", rep.details["retained"].get<std::uint64_t>());
  n.add("attempted", p.replicas).add("means_within_3se", mean_ok ? "yes" : "no");
  return {fano_ok && mean_ok && corr < 0.05 && rep.verdict == Verdict::pass, n.str()};
}

Outcome hazard() {
  constexpr double kSpreadTol = 0.25;
  const RngStream rng(1007, 0);
  std::vector<StatReport> per;
  std::uint64_t k = 0;
  Notes n;
  for (double R : {2.0, 4.0, 8.0}) {
    HazardParams p;
    p.R = R;
    p.replicas = 10'000;
    per.push_back(hazard_estimate(p, rng.substream(StreamTag::estimator, k++)));
    n.add("r/R(" + fmt(R) + ")", fmt(per.back().details["rate_over_R"].get<double>(), 4));
    n.add("ks_p(" + fmt(R) + ")", fmt(per.back().details["ks_pvalue"].get<double>(), 3));
  }
  const auto lin = hazard_linearity(per, kSpreadTol);
  n.add("spread", fmt(lin.estimate, 4));
  return {lin.verdict == Verdict::pass, n.str()};
}

Outcome refill() {
  constexpr double kMinRatio = 0.9;
  RefillParams p;
  p.lambda = 1.0;
  p.R = 5.0;
  p.t = 175.0;
  p.probe = Annulus(0.0, 1.0);
  p.replicas = 10'000;
  p.delta = 1 - kMinRatio;
  const auto rep = refill_density_estimate(p, RngStream(1008, 0));
  Notes n;
  n.add("density_ratio", fmt(rep.estimate, 4));
  n.add("ci95", "[" + fmt(rep.ci_low, 4) + "," + fmt(rep.ci_high, 4) + "]");
  n.add("truncation_bound", fmt(rep.details["truncation_bound"].get<double>(), 3));
  return {rep.estimate >= kMinRatio, n.str()};
}

Outcome box_reproduction() {
  // Only lambda and horizon are given; box side and step come from defaults.
  const std::string doc =
      R"({"command": "simulate-box", "replicas": 20, "master_seed": 1009,
          "parameters": {"lambda": 1, "horizon": 100}})";
  auto cfg = parse_config(std::string_view(doc));
  const bool defaults_ok = cfg.parameters["box_side"].get<double>() == 800.0 &&
                           cfg.parameters["dt"].get<double>() == 0.01;
  cfg.workers = 1;
  cfg.output_dir = scratch("box-w1").string();
  const auto a = run_ensemble(cfg);
  cfg.workers = 8;
  cfg.output_dir = scratch("box-w8").string();
  const auto b = run_ensemble(cfg);
  const bool identical = snapshot(a.output_dir) == snapshot(b.output_dir);

  const auto files = trajectory_files(a.output_dir);
  std::size_t monotone = 0;
  std::vector<Trajectory> trajs;
  for (const auto& f : files) {
    const auto text = read_text_file(f);
    // Mass column: plain unsigned integers.
    bool int_mass = true;
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
      std::vector<std::string> cols;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cols.push_back(cell);
      int_mass = int_mass && cols.size() >= 3 && !cols[2].empty() &&
                 std::all_of(cols[2].begin(), cols[2].end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    }
    const auto t = trajectory_from_csv(text);
    bool mono = int_mass;
    for (std::size_t i = 1; i < t.events.size(); ++i) {
      mono = mono && t.events[i].time > t.events[i - 1].time &&
             t.events[i].mass_after >= t.events[i - 1].mass_after &&
             t.events[i].radius_after >= t.events[i - 1].radius_after;
    }
    monotone += mono ? 1 : 0;
    trajs.push_back(t);
  }
  const fs::path qpath = a.output_dir / "quantiles.csv";
  const bool qtable = fs::exists(qpath) &&
                      read_text_file(qpath).rfind("time,q10,q50,q90,min,max\n", 0) == 0;
  std::vector<double> radii;
  for (const auto& t : trajs) radii.push_back(t.radius_at(100.0));
  std::sort(radii.begin(), radii.end());
  const bool ok = defaults_ok && files.size() == 20 && monotone == 20 && qtable && identical;
  Notes n;
  n.add("trajectories", files.size()).add("monotone_integer_mass", monotone);
  n.add("quantile_table", qtable ? "yes" : "no").add("workers_1_vs_8_identical", identical ? "yes" : "no");
  if (!radii.empty()) {
    n.add("radius(100) min/median/max", fmt(radii.front(), 4) + "/" + fmt(quantile(radii, 0.5), 4) +
                                            "/" + fmt(radii.back(), 4));
  }
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);
  return {ok, n.str()};
}

Outcome invariants() {
  std::uint64_t runs = 0, audit_fail = 0, emptiness_gap = 0, nondeterministic = 0;
  auto check = [&](const Trajectory& t, const std::string& again) {
    ++runs;
    if (mass_audit(t).verdict != Verdict::pass) ++audit_fail;
    // With auditing on, every event that completed a cascade was checked.
    const std::uint64_t expected = t.events.size() - (t.events.back().flag ? 1 : 0);
    if (t.info.audited_events < expected) ++emptiness_gap;
    if (trajectory_to_csv(t) != again) ++nondeterministic;
  };
  for (double lam : {0.5, 1.0, 1.5}) {
    for (Scheduler s : {Scheduler::uniformized, Scheduler::heap}) {
      for (std::uint64_t i = 0; i < 6; ++i) {
        ExactConfig c;
        c.lambda = lam;
        c.horizon = 15;
        c.sim_radius = 30;
        c.target_radius_hint = 6;
        c.cap = 20'000;
        c.scheduler = s;
        c.audit = true;
        c.master_seed = 1010;
        c.stream_index = i;
        check(run_exact(c), trajectory_to_csv(run_exact(c)));
      }
    }
  }
  for (Kinematics k : {Kinematics::random_walk, Kinematics::brownian}) {
    for (std::uint64_t i = 0; i < 4; ++i) {
      BoxConfig c;
      c.lambda = 1.0;
      c.box_side = i == 0 ? 16.0 : 100.0;  // the first run hits the boundary
      c.horizon = i == 0 ? 200.0 : 20.0;
      c.dt = 0.05;
      c.kinematics = k;
      c.audit = true;
      c.master_seed = 1010;
      c.stream_index = i;
      check(run_box(c), trajectory_to_csv(run_box(c)));
    }
  }
  // Input-order invariance of the cascade.
  std::uint64_t order_fail = 0;
  const RngStream root(1010, 99);
  for (std::uint64_t i = 0; i < 2000; ++i) {
    RngStream r = root.substream(StreamTag::field, i);
    const auto pts = sample_ppp_annulus(1.0, Annulus(0, 10), r);
    std::vector<ActiveParticle> act;
    for (std::size_t j = 0; j < pts.size(); ++j) act.push_back({j, pts[j]});
    const auto ref = cascade(act, 1, 0.0, 1'000'000);
    for (std::size_t j = act.size(); j > 1; --j) std::swap(act[j - 1], act[uniform_index(j, r)]);
    const auto got = cascade(act, 1, 0.0, 1'000'000);
    if (got.rounds != ref.rounds || got.final_mass != ref.final_mass) ++order_fail;
  }
  // Same seed, same artifact bytes, through the ensemble runner.
  auto cfg = parse_config(std::string_view(
      R"({"command": "simulate-exact", "replicas": 4, "master_seed": 1010,
          "parameters": {"lambda": 0.8, "horizon": 20, "sim_radius": 30, "target_radius_hint": 6, "audit": true}})"));
  cfg.output_dir = scratch("inv-a").string();
  const auto a = run_ensemble(cfg);
  cfg.output_dir = scratch("inv-b").string();
  const auto b = run_ensemble(cfg);
  const bool same_bytes = snapshot(a.output_dir) == snapshot(b.output_dir);
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);

  Notes n;
  n.add("engine_runs", runs).add("mass_audit_failures", audit_fail);
  n.add("emptiness_gaps", emptiness_gap).add("order_variant_cascades", order_fail);
  n.add("nondeterministic_runs", nondeterministic).add("ensemble_bytes_identical", same_bytes ? "yes" : "no");
  return {audit_fail == 0 && emptiness_gap == 0 && order_fail == 0 && nondeterministic == 0 && same_bytes,
          n.str()};
}

Outcome lln() {
  constexpr double kRatioTol = 0.01, kTimingTol = 0.05;
  constexpr std::uint64_t kSteps = 100'000, kPaths = 100;
  const auto rep = exp_lln_check({1'000'000, kRatioTol}, RngStream(1011, 0));
  // Dominating process from explicit inputs; the identity is pooled over
  // independent paths (see README).
  const RngStream root(1011, 1);
  double tau_total = 0, sum_total = 0, first_path = 0;
  std::uint64_t within = 0;
  for (std::uint64_t path = 0; path < kPaths; ++path) {
    RngStream xs = root.substream(StreamTag::branching, path);
    RngStream ts = root.substream(StreamTag::clocks, path);
    std::vector<std::uint64_t> x(kSteps + 1);
    std::vector<double> t(kSteps);
    for (auto& v : x) v = sample_borel(1.0, xs);
    for (auto& v : t) v = -std::log(ts.uniform_open());
    const auto tr = dominating_trajectory(x, t, 1.0);
    double inv = 0;
    std::uint64_t mass = 0;
    for (std::uint64_t k = 0; k < kSteps; ++k) {
      mass += x[k];
      inv += 1.0 / std::sqrt(static_cast<double>(mass) / kPi);
    }
    const double tau = tr.events.back().time;
    tau_total += tau;
    sum_total += inv;
    if (path == 0) first_path = tau / inv;
    within += std::abs(tau / inv - 1) <= kTimingTol ? 1 : 0;
  }
  const double pooled = tau_total / sum_total;
  Notes n;
  n.add("lln_ratio(n=1e6)", fmt(rep.estimate, 6)).add("timing_ratio_pooled", fmt(pooled, 4));
  n.add("paths", kPaths).add("single_path_ratio", fmt(first_path, 4));
  n.add("paths_within_5%", within);
  return {std::abs(rep.estimate - 1) <= kRatioTol && std::abs(pooled - 1) <= kTimingTol, n.str()};
}

Outcome stall() {
  std::vector<double> t, r;
  for (int i = 0; i <= 20000; ++i) {
    t.push_back(i * 0.1);
    r.push_back(std::max(std::pow(i * 0.1, 0.6), 1.0 / std::sqrt(kPi)));
  }
  const auto tr = make_step_trajectory(t, r, 2000.0);
  StallParams p;
  p.alpha = 0.4;
  p.beta = 1.0 / 9.6;
  p.T0 = 100;
  const auto got = find_stall(tr, p);
  // Brute force: every event time and integer after T0, evaluated on the
  // raw samples with a binary search.
  auto value = [&](double x) {
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    return r[static_cast<std::size_t>(it - t.begin()) - 1];
  };
  std::vector<double> grid;
  for (double x : t) {
    if (x > p.T0) grid.push_back(x);
  }
  for (int k = 101; k <= 2000; ++k) grid.push_back(k);
  std::sort(grid.begin(), grid.end());
  std::optional<double> want;
  for (double t1 : grid) {
    const double s = t1 - std::pow(t1, p.beta);
    if (s >= 0 && value(s) >= value(t1) - 2.0) {
      want = t1;
      break;
    }
  }
  const bool holds = got && value(*got - std::pow(*got, p.beta)) >= value(*got) - 2.0;
  Notes n;
  n.add("t1", got ? fmt(*got, 8) : "none").add("oracle_t1", want ? fmt(*want, 8) : "none");
  n.add("re_evaluated", holds ? "holds" : "violated");
  return {got.has_value() && want.has_value() && *got == *want && holds, n.str()};
}

struct Criterion {
  int id;
  const char* title;
  Outcome (*run)();
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "time-0 cascade matches the branching law", cascade_law},
      {2, "Borel pmf and critical tail slope", borel_oracle},
      {3, "extinction fixed point", extinction},
      {4, "phase transition by cap-hit frequency", phase_transition},
      {5, "sub-critical diffusive growth exponent", growth},
      {6, "conditional field is Poisson", kurtz},
      {7, "arrival hazard is linear in R", hazard},
      {8, "emptied ball refills", refill},
      {9, "box-model reproduction, 20 runs", box_reproduction},
      {10, "invariant suite", invariants},
      {11, "weighted exponential LLN and dominating timing", lln},
      {12, "stall finder against brute force", stall},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poolsim acceptance runs"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion number (repeatable)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  bool all_ok = true;
  for (const auto& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << c.id << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << c.title
              << ": " << o.summary << " [" << fmt(secs, 3) << " s]" << std::endl;
    all_ok = all_ok && o.pass;
  }
  return all_ok ? 0 : 1;
}
