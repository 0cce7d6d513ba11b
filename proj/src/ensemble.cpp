#include "poolsim/ensemble.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "poolsim/box_engine.hpp"
#include "poolsim/branching.hpp"
#include "poolsim/estimators.hpp"
#include "poolsim/exact_engine.hpp"
#include "poolsim/io.hpp"
#include "poolsim/traj_analysis.hpp"

#ifndef POOLSIM_VERSION
#define POOLSIM_VERSION "unknown"
#endif

namespace poolsim {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string code_version() { return POOLSIM_VERSION; }

fs::path default_output_dir(const ExperimentConfig& cfg) {
  const char* env = std::getenv("POOLSIM_OUTPUT_ROOT");
  const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("poolsim-output");
  std::string leaf(to_string(cfg.command));
  if (!cfg.name.empty()) leaf += "-" + cfg.name;
  leaf += "-seed" + std::to_string(cfg.master_seed);
  return root / leaf;
}

std::vector<fs::path> trajectory_files(const fs::path& dir) {
  fs::path d = dir;
  if (fs::is_directory(dir / "trajectories")) d = dir / "trajectories";
  if (!fs::is_directory(d)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(d)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("replica_", 0) == 0 && e.path().extension() == ".csv") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no replica_*.csv files in '" + d.string() + "'");
  return out;
}

namespace {

struct Logger {
  LogLevel level;
  void info(const std::string& msg) const {
    if (level != LogLevel::quiet) std::cerr << "[poolsim] " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level == LogLevel::debug) std::cerr << "[poolsim:debug] " << msg << '\n';
  }
};

void probe_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw OutputError("output directory '" + dir.string() + "' cannot be created" +
                      (ec ? ": " + ec.message() : std::string()));
  }
  const fs::path probe = dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) {
      throw OutputError("output directory '" + dir.string() + "' is not writable");
    }
  }
  fs::remove(probe, ec);
}

std::string replica_stem(std::uint64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replica_%04llu", static_cast<unsigned long long>(i));
  return buf;
}

// Wilson score interval at 95%.
StatReport fraction_report(std::string name, std::uint64_t hits, std::uint64_t n) {
  StatReport r;
  r.name = std::move(name);
  r.n_samples = n;
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = nn > 0 ? static_cast<double>(hits) / nn : 0.0;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  r.estimate = p;
  r.ci_low = std::max(0.0, centre - half);
  r.ci_high = std::min(1.0, centre + half);
  r.details["hits"] = hits;
  r.verdict = Verdict::inconclusive;  // descriptive only
  return r;
}

StatReport audit_all(const std::vector<Trajectory>& trajs, const std::vector<std::string>& labels) {
  StatReport r;
  r.name = "mass_audit";
  r.n_samples = trajs.size();
  Json failures = Json::array();
  std::uint64_t ok = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const StatReport a = mass_audit(trajs[i]);
    if (a.verdict == Verdict::pass) {
      ++ok;
    } else {
      failures.push_back({{"replica", labels[i]}, {"details", a.details}});
    }
  }
  r.estimate = r.ci_low = r.ci_high = trajs.empty() ? 0.0 : static_cast<double>(ok) / trajs.size();
  r.details["failures"] = failures;
  r.verdict = failures.empty() ? Verdict::pass : Verdict::fail;
  return r;
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  for (std::uint64_t k = 0;; ++k) {
    const double t = lo + static_cast<double>(k) * step;
    if (t > hi + 1e-9 * std::max(1.0, hi)) break;
    out.push_back(std::min(t, hi));
  }
  return out;
}

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, fs::path dir, Logger log)
      : cfg_(cfg), dir_(std::move(dir)), log_(log) {
    manifest_ = {{"config", cfg.echo()}, {"code_version", code_version()}};
  }

  EnsembleResult run() {
    switch (cfg_.command) {
      case Command::simulate_exact:
      case Command::simulate_box: simulate(); break;
      case Command::branching: branching(); break;
      case Command::estimate: estimate(); break;
      case Command::analyze: analyze(); break;
    }
    Json reps = Json::array();
    for (const auto& r : reports_) reps.push_back(r.to_json());
    write_text_file(dir_ / "reports.json", reps.dump(2) + "\n");
    write_text_file(dir_ / "manifest.json", manifest_.dump(2) + "\n");

    EnsembleResult res;
    res.output_dir = dir_;
    res.reports = reports_;
    for (const auto& r : reports_) {
      log_.info(r.name + ": " + std::string(to_string(r.verdict)) +
                " (estimate " + format_double(r.estimate) + ")");
      if (r.verdict == Verdict::fail) res.exit_code = 1;
    }
    return res;
  }

 private:
  const Json& param(const char* key) const { return cfg_.parameters.at(key); }
  double num(const char* key) const { return param(key).get<double>(); }
  std::uint64_t count(const char* key) const { return param(key).get<std::uint64_t>(); }

  // ---- simulate-exact / simulate-box ----

  void simulate() {
    const bool exact = cfg_.command == Command::simulate_exact;
    const std::uint64_t n = cfg_.replicas;
    std::vector<Trajectory> trajs(n);
    std::vector<std::string> errors(n);
    const bool inner_parallel = n == 1;

    // The field radius does not depend on the replica; resolve it once.
    std::optional<ExactConfig> ebase;
    if (exact) {
      ebase = exact_config(cfg_, 0);
      log_.info("exact engine: sim_radius " + format_double(ebase->sim_radius) +
                ", truncation bound " + format_double(truncation_error_bound(*ebase)));
    }
    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(cfg_.workers))
    for (std::int64_t i = 0; i < sn; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      try {
        if (exact) {
          ExactConfig e = *ebase;
          e.stream_index = idx;
          trajs[idx] = run_exact(e);
        } else {
          trajs[idx] = run_box(box_config(cfg_, idx), inner_parallel);
        }
      } catch (const std::logic_error& ex) {
        errors[idx] = ex.what();
      }
    }

    Json replicas = Json::array();
    std::vector<std::string> labels;
    std::vector<Trajectory> good;
    std::uint64_t capped = 0, boundary = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::string stem = replica_stem(i);
      Json m = {{"replica", i}, {"master_seed", cfg_.master_seed}, {"stream_index", i}};
      if (!errors[i].empty()) {
        m["error"] = errors[i];
        replicas.push_back(m);
        continue;
      }
      const Trajectory& t = trajs[i];
      write_text_file(dir_ / "trajectories" / (stem + ".csv"), trajectory_to_csv(t));
      write_text_file(dir_ / "trajectories" / (stem + ".jsonl"), trajectory_to_jsonl(t));
      m["file"] = "trajectories/" + stem + ".csv";
      m["engine"] = t.info.engine;
      if (exact) {
        m["truncation_bound"] = t.info.truncation_bound;
        m["hint_exceeded"] = t.info.hint_exceeded;
      }
      m["exploded_at"] = t.exploded_at ? Json(*t.exploded_at) : Json(nullptr);
      m["final_mass"] = t.final_mass();
      m["events"] = t.events.size();
      m["initial_particles"] = t.info.initial_particles;
      m["released"] = t.info.released;
      replicas.push_back(m);
      if (t.exploded_at) ++capped;
      if (!t.events.empty() && t.events.back().kind == EventKind::boundary_hit) ++boundary;
      labels.push_back(stem);
      good.push_back(t);
    }
    manifest_["replicas"] = replicas;
    if (exact) {
      manifest_["sim_radius"] = ebase->sim_radius;
      manifest_["truncation_bound"] = truncation_error_bound(*ebase);
    } else {
      manifest_["ceiling_mass"] = box_config(cfg_, 0).ceiling_mass();
    }

    reports_.push_back(audit_all(good, labels));
    const bool audit = param("audit").get<bool>();
    if (audit) {
      StatReport e;
      e.name = "emptiness_audit";
      e.n_samples = n;
      std::uint64_t audited = 0, bad = 0;
      Json fails = Json::array();
      for (std::uint64_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) {
          ++bad;
          fails.push_back({{"replica", i}, {"error", errors[i]}});
        } else {
          audited += trajs[i].info.audited_events;
        }
      }
      e.estimate = e.ci_low = e.ci_high = static_cast<double>(bad);
      e.details["audited_events"] = audited;
      e.details["failures"] = fails;
      e.verdict = bad == 0 ? Verdict::pass : Verdict::fail;
      reports_.push_back(e);
    } else {
      for (std::uint64_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) throw std::runtime_error("replica " + std::to_string(i) + ": " +
                                                         errors[i]);
      }
    }
    reports_.push_back(fraction_report("cap_hit_fraction", capped, n));
    if (!exact) reports_.push_back(fraction_report("boundary_hit_fraction", boundary, n));

    if (!good.empty()) {
      const auto times = grid(0.0, num("horizon"), num("quantile_step"));
      write_text_file(dir_ / "quantiles.csv", quantiles_to_csv(ensemble_quantiles(good, times)));
    }
  }

  // ---- branching ----

  void branching() {
    std::string table = "lambda,q,p0,bound\n";
    for (const auto& l : param("lambdas")) {
      const double lambda = l.get<double>();
      const double q = extinction_prob(lambda);
      const double bound = lambda > 1.0 ? survival_lower_bound(lambda) : 0.0;
      table += format_double(lambda) + ',' + format_double(q) + ',' + format_double(1.0 - q) +
               ',' + format_double(bound) + '\n';
    }
    write_text_file(dir_ / "extinction.csv", table);

    const std::uint64_t samples = count("progeny_samples");
    if (samples > 0) {
      GwParams gw{num("offspring_mean"), num("root_mean")};
      gw.validate();
      const std::uint64_t cap = count("progeny_cap");
      const RngStream root(cfg_.master_seed, 0);
      std::vector<ProgenySample> out(samples);
      const auto sn = static_cast<std::int64_t>(samples);
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(cfg_.workers))
      for (std::int64_t k = 0; k < sn; ++k) {
        RngStream rng = root.substream(StreamTag::branching, static_cast<std::uint64_t>(k));
        out[static_cast<std::size_t>(k)] = sample_total_progeny(gw, cap, rng);
      }
      std::map<std::uint64_t, std::uint64_t> hist;
      std::uint64_t capped = 0;
      std::vector<double> values;
      values.reserve(samples);
      for (const auto& s : out) {
        ++hist[s.count];
        if (s.capped) ++capped;
        values.push_back(static_cast<double>(s.count));
      }
      std::string h = "n,count\n";
      for (const auto& [k, c] : hist) h += std::to_string(k) + ',' + std::to_string(c) + '\n';
      write_text_file(dir_ / "progeny.csv", h);
      reports_.push_back(fraction_report("progeny_capped_fraction", capped, samples));
      if (gw.offspring_mean == 1.0 && samples >= TailFitParams{}.min_samples) {
        reports_.push_back(cascade_tail_fit(values));
      }
    }

    const std::uint64_t steps = count("dominating_steps");
    if (steps > 0) {
      const std::uint64_t n = cfg_.replicas;
      std::vector<Trajectory> trajs(n);
      const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(cfg_.workers))
      for (std::int64_t i = 0; i < sn; ++i) {
        DominatingConfig dc;
        dc.hazard_constant = num("hazard_constant");
        dc.step_count = steps;
        dc.offspring_mean = num("offspring_mean");
        dc.master_seed = cfg_.master_seed;
        dc.stream_index = static_cast<std::uint64_t>(i);
        trajs[static_cast<std::size_t>(i)] = dominating_trajectory(dc);
      }
      Json replicas = Json::array();
      double tau = 0.0, sum = 0.0;
      const double c = num("hazard_constant");
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::string stem = replica_stem(i);
        write_text_file(dir_ / "trajectories" / (stem + ".csv"), trajectory_to_csv(trajs[i]));
        const auto& ev = trajs[i].events;
        for (std::size_t k = 0; k + 1 < ev.size(); ++k) sum += 1.0 / (c * ev[k].radius_after);
        tau += ev.back().time;
        replicas.push_back({{"replica", i},
                            {"master_seed", cfg_.master_seed},
                            {"stream_index", i},
                            {"file", "trajectories/" + stem + ".csv"},
                            {"final_mass", trajs[i].final_mass()},
                            {"final_time", ev.back().time}});
      }
      manifest_["replicas"] = replicas;
      StatReport r;
      r.name = "dominating_timing_ratio";
      r.estimate = r.ci_low = r.ci_high = sum > 0 ? tau / sum : 0.0;
      r.n_samples = n * steps;
      r.details["tau_total"] = tau;
      r.details["inverse_rate_total"] = sum;
      r.verdict = Verdict::inconclusive;
      reports_.push_back(r);
    }
  }

  // ---- estimate ----

  void estimate() {
    const RngStream rng(cfg_.master_seed, 0);
    const std::string& name = cfg_.name;
    const std::uint64_t n = cfg_.replicas;
    if (name == "kurtz") {
      KurtzParams p;
      p.lambda = num("lambda");
      p.pool_radius = num("pool_radius");
      p.t = num("t");
      for (const auto& a : param("annuli")) {
        p.annuli.emplace_back(a[0].get<double>(), a[1].get<double>());
      }
      p.replicas = n;
      p.oracle_walkers = count("oracle_walkers");
      reports_.push_back(kurtz_test(p, rng));
    } else if (name == "hazard") {
      std::vector<StatReport> per;
      std::uint64_t k = 0;
      for (const auto& rv : param("radii")) {
        HazardParams p;
        p.R = rv.get<double>();
        p.replicas = n;
        p.lambda = num("lambda");
        p.t_max = num("t_max");
        p.alpha = num("alpha");
        per.push_back(hazard_estimate(p, rng.substream(StreamTag::estimator, k++)));
      }
      reports_.insert(reports_.end(), per.begin(), per.end());
      if (per.size() >= 2) reports_.push_back(hazard_linearity(per, num("tol")));
    } else if (name == "refill") {
      RefillParams p;
      p.lambda = num("lambda");
      p.R = num("R");
      p.t = num("t");
      p.probe = Annulus(param("probe")[0].get<double>(), param("probe")[1].get<double>());
      p.replicas = n;
      p.delta = num("delta");
      reports_.push_back(refill_density_estimate(p, rng));
    } else if (name == "hitting") {
      HittingParams p;
      p.x_radius = num("x_radius");
      p.k = num("k");
      p.replicas = n;
      p.band_lo = num("band_lo");
      p.band_hi = num("band_hi");
      reports_.push_back(hitting_prob_estimate(p, rng));
    } else if (name == "entered") {
      EnteredParams p;
      p.lambda = num("lambda");
      p.k = num("k");
      p.replicas = n;
      p.fano_lo = num("fano_lo");
      p.fano_hi = num("fano_hi");
      reports_.push_back(entered_count_estimate(p, rng));
    } else if (name == "lln") {
      reports_.push_back(exp_lln_check(LlnParams{count("n"), num("tol")}, rng));
    } else if (name == "cascade-law") {
      CascadeLawParams p;
      p.lambda = num("lambda");
      p.replicas = n;
      p.p0_tol = num("p0_tol");
      p.p1_tol = num("p1_tol");
      p.min_pvalue = num("min_pvalue");
      reports_.push_back(cascade_law_test(p, rng));
    } else if (name == "cascade-tail") {
      GwParams gw{num("offspring_mean"), num("root_mean")};
      gw.validate();
      const std::uint64_t cap = count("progeny_cap");
      std::vector<double> values(n);
      const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
      for (std::int64_t k = 0; k < sn; ++k) {
        RngStream s = rng.substream(StreamTag::branching, static_cast<std::uint64_t>(k));
        values[static_cast<std::size_t>(k)] =
            static_cast<double>(sample_total_progeny(gw, cap, s).count);
      }
      TailFitParams tp;
      tp.expected_slope = num("expected_slope");
      tp.tol = num("tol");
      if (n < tp.min_samples) {
        throw ConfigError({"cascade-tail needs replicas >= " + std::to_string(tp.min_samples)});
      }
      reports_.push_back(cascade_tail_fit(values, tp));
    } else if (name == "volume-scan") {
      const double lambda = num("lambda"), R = num("R"), delta = num("delta");
      const auto times = grid(0.0, num("horizon"), num("step"));
      std::vector<StatReport> per(n);
      const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::int64_t i = 0; i < sn; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const auto snaps = free_field_ball_counts(lambda, R, times,
                                                  rng.substream(StreamTag::estimator, idx));
        per[idx] = volume_deviation_scan(snaps, lambda, R, delta);
      }
      std::uint64_t bad = 0;
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& r : per) {
        if (r.verdict == Verdict::fail) ++bad;
        worst = std::min(worst, r.estimate);
      }
      StatReport agg = fraction_report("volume_deviation_scan", bad, n);
      agg.details["worst_margin"] = worst;
      agg.details["threshold"] = per.empty() ? Json(nullptr) : per.front().details["threshold"];
      agg.details["snapshots_per_replica"] = times.size();
      agg.verdict = bad == 0 ? Verdict::pass : Verdict::fail;
      reports_.push_back(agg);
    }
  }

  // ---- analyze ----

  std::vector<Trajectory> load_dir(const fs::path& dir, std::vector<std::string>& labels) const {
    std::vector<Trajectory> out;
    for (const auto& f : trajectory_files(dir)) {
      out.push_back(read_trajectory_csv(f));
      labels.push_back(f.filename().string());
    }
    log_.info("loaded " + std::to_string(out.size()) + " trajectories");
    return out;
  }

  void analyze() {
    const std::string& name = cfg_.name;
    if (name == "stall") {
      const Trajectory t = read_trajectory_csv(param("input").get<std::string>());
      StallParams sp = num("beta") > 0.0 ? StallParams{num("alpha"), num("beta"), num("T0")}
                                         : StallParams::from_alpha(num("alpha"), num("T0"));
      sp.validate();
      const auto t1 = find_stall(t, sp);
      StatReport r;
      r.name = "stall_finder";
      r.n_samples = stall_grid(t, sp.T0).size();
      r.details["beta"] = sp.beta;
      r.details["T0"] = sp.T0;
      if (t1) {
        r.estimate = r.ci_low = r.ci_high = *t1;
        r.verdict = stall_holds(t, *t1, sp.beta) ? Verdict::pass : Verdict::fail;
      } else {
        r.details["found"] = false;
        r.verdict = Verdict::inconclusive;
      }
      reports_.push_back(r);
      return;
    }

    std::vector<std::string> labels;
    const auto trajs = load_dir(param("input_dir").get<std::string>(), labels);
    manifest_["inputs"] = labels;
    if (name == "mass-audit") {
      reports_.push_back(audit_all(trajs, labels));
    } else if (name == "quantiles") {
      double h = num("horizon");
      if (h <= 0.0) {
        for (const auto& t : trajs) h = std::max(h, t.events.back().time);
      }
      const auto times = grid(0.0, h, num("step"));
      write_text_file(dir_ / "quantiles.csv", quantiles_to_csv(ensemble_quantiles(trajs, times)));
    } else if (name == "growth") {
      GrowthFitParams gp;
      gp.t_min = num("t_min");
      gp.t_max = num("t_max");
      gp.slope_lo = num("slope_lo");
      gp.slope_hi = num("slope_hi");
      std::vector<double> times(gp.points), med(gp.points);
      const double a = std::log(gp.t_min), b = std::log(gp.t_max);
      for (std::size_t i = 0; i < gp.points; ++i) {
        times[i] = std::exp(a + (b - a) * static_cast<double>(i) / (gp.points - 1));
        med[i] = radius_quantile(trajs, times[i], 0.5);
      }
      StatReport r = growth_exponent_fit(times, med, gp);
      r.name = "growth_exponent_median";
      reports_.push_back(r);
    }
  }

  const ExperimentConfig& cfg_;
  fs::path dir_;
  Logger log_;
  Json manifest_;
  std::vector<StatReport> reports_;
};

}  // namespace

EnsembleResult run_ensemble(const ExperimentConfig& cfg, LogLevel log) {
  const fs::path dir = cfg.output_dir ? fs::path(*cfg.output_dir) : default_output_dir(cfg);
  probe_writable(dir);
  Logger logger{log};
  logger.info("writing to " + dir.string());
  const int saved = omp_get_max_threads();
  omp_set_num_threads(static_cast<int>(cfg.workers));
  try {
    EnsembleResult res = Runner(cfg, dir, logger).run();
    omp_set_num_threads(saved);
    return res;
  } catch (...) {
    omp_set_num_threads(saved);
    throw;
  }
}

}  // namespace poolsim
