#include "poolsim/config.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "poolsim/engulf.hpp"

namespace poolsim {

std::string_view to_string(Command c) {
  switch (c) {
    case Command::simulate_exact: return "simulate-exact";
    case Command::simulate_box: return "simulate-box";
    case Command::branching: return "branching";
    case Command::estimate: return "estimate";
    case Command::analyze: return "analyze";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  if (name == "simulate-exact") return Command::simulate_exact;
  if (name == "simulate-box") return Command::simulate_box;
  if (name == "branching") return Command::branching;
  if (name == "estimate") return Command::estimate;
  if (name == "analyze") return Command::analyze;
  return std::nullopt;
}

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  - " + e;
  return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::invalid_argument(join_errors(errors)), errors_(std::move(errors)) {}

nlohmann::json ExperimentConfig::echo() const {
  nlohmann::json j = {{"command", std::string(to_string(command))},
                      {"parameters", parameters},
                      {"replicas", replicas},
                      {"master_seed", master_seed}};
  if (!name.empty()) j["name"] = name;
  return j;
}

namespace {

using Json = nlohmann::json;

enum class Kind { real, integer, boolean, text, real_list, pair_list };

// A bound check returns the violated bound ("lambda > 0") or nothing.
using Check = std::function<std::optional<std::string>(const Json&)>;

struct Param {
  std::string key;
  Kind kind;
  Json fallback;  // null means required
  Check check;
};

Check positive(const std::string& key) {
  return [key](const Json& v) -> std::optional<std::string> {
    if (v.get<double>() > 0.0) return std::nullopt;
    return key + " > 0";
  };
}

Check at_least(const std::string& key, double lo, const std::string& shown) {
  return [key, lo, shown](const Json& v) -> std::optional<std::string> {
    if (v.get<double>() >= lo) return std::nullopt;
    return key + " >= " + shown;
  };
}

Check in_open_unit(const std::string& key) {
  return [key](const Json& v) -> std::optional<std::string> {
    const double x = v.get<double>();
    if (x > 0.0 && x < 1.0) return std::nullopt;
    return "0 < " + key + " < 1";
  };
}

Check one_of(const std::string& key, std::vector<std::string> options) {
  return [key, options](const Json& v) -> std::optional<std::string> {
    const auto s = v.get<std::string>();
    for (const auto& o : options) {
      if (s == o) return std::nullopt;
    }
    std::string msg = key + " must be one of";
    for (const auto& o : options) msg += " '" + o + "'";
    return msg;
  };
}

Check none() { return {}; }

const double kR0 = 0.5641895835477563;  // radius of the unit-area ball

std::vector<Param> schema_for(Command c, const std::string& name) {
  switch (c) {
    case Command::simulate_exact:
      return {{"lambda", Kind::real, nullptr, positive("lambda")},
              {"horizon", Kind::real, nullptr, positive("horizon")},
              {"sim_radius", Kind::real, 0.0, at_least("sim_radius", 0.0, "0")},
              {"target_radius_hint", Kind::real, 10.0,
               at_least("target_radius_hint", kR0, "1/sqrt(pi)")},
              {"cap", Kind::integer, 10'000'000, at_least("cap", 1.0, "1")},
              {"scheduler", Kind::text, "uniformized",
               one_of("scheduler", {"uniformized", "heap"})},
              {"truncation_tolerance", Kind::real, 1e-3, positive("truncation_tolerance")},
              {"audit", Kind::boolean, false, none()},
              {"quantile_step", Kind::real, 1.0, positive("quantile_step")}};
    case Command::simulate_box:
      return {{"lambda", Kind::real, nullptr, positive("lambda")},
              {"box_side", Kind::real, 800.0, positive("box_side")},
              {"dt", Kind::real, 0.01, positive("dt")},
              {"horizon", Kind::real, nullptr, positive("horizon")},
              {"kinematics", Kind::text, "random-walk",
               one_of("kinematics", {"random-walk", "brownian"})},
              {"cap", Kind::integer, 10'000'000, at_least("cap", 1.0, "1")},
              {"audit", Kind::boolean, false, none()},
              {"quantile_step", Kind::real, 1.0, positive("quantile_step")}};
    case Command::branching:
      return {{"lambdas", Kind::real_list, Json::array({0.5, 1.0, 1.5, 2.0, 3.0}), none()},
              {"progeny_samples", Kind::integer, 0, at_least("progeny_samples", 0.0, "0")},
              {"offspring_mean", Kind::real, 1.0, positive("offspring_mean")},
              {"root_mean", Kind::real, 1.0, positive("root_mean")},
              {"progeny_cap", Kind::integer, 1'000'000'000, at_least("progeny_cap", 1.0, "1")},
              {"dominating_steps", Kind::integer, 0, at_least("dominating_steps", 0.0, "0")},
              {"hazard_constant", Kind::real, 1.0, positive("hazard_constant")}};
    case Command::estimate:
      if (name == "kurtz") {
        return {{"lambda", Kind::real, 1.0, positive("lambda")},
                {"pool_radius", Kind::real, kR0, positive("pool_radius")},
                {"t", Kind::real, 1.0, at_least("t", 0.0, "0")},
                {"annuli", Kind::pair_list, Json::array({{1, 2}, {2, 3}, {3, 4}}), none()},
                {"oracle_walkers", Kind::integer, 100'000, at_least("oracle_walkers", 1.0, "1")}};
      }
      if (name == "hazard") {
        return {{"radii", Kind::real_list, Json::array({2.0, 4.0, 8.0}), none()},
                {"lambda", Kind::real, 1.0, at_least("lambda", 0.0, "0")},
                {"t_max", Kind::real, 1.0, positive("t_max")},
                {"alpha", Kind::real, 0.01, in_open_unit("alpha")},
                {"tol", Kind::real, 0.25, positive("tol")}};
      }
      if (name == "refill") {
        return {{"lambda", Kind::real, 1.0, positive("lambda")},
                {"R", Kind::real, 5.0, positive("R")},
                {"t", Kind::real, 175.0, at_least("t", 0.0, "0")},
                {"probe", Kind::real_list, Json::array({0.0, 1.0}), none()},
                {"delta", Kind::real, 0.1, in_open_unit("delta")}};
      }
      if (name == "hitting") {
        return {{"x_radius", Kind::real, 5.0, at_least("x_radius", kR0, "1/sqrt(pi)")},
                {"k", Kind::real, 100.0, positive("k")},
                {"band_lo", Kind::real, 0.2, positive("band_lo")},
                {"band_hi", Kind::real, 5.0, positive("band_hi")}};
      }
      if (name == "entered") {
        return {{"lambda", Kind::real, 1.0, positive("lambda")},
                {"k", Kind::real, 100.0, at_least("k", 0.0, "0")},
                {"fano_lo", Kind::real, 0.85, positive("fano_lo")},
                {"fano_hi", Kind::real, 1.15, positive("fano_hi")}};
      }
      if (name == "lln") {
        return {{"n", Kind::integer, 1'000'000, at_least("n", 1.0, "1")},
                {"tol", Kind::real, 0.01, positive("tol")}};
      }
      if (name == "cascade-law") {
        return {{"lambda", Kind::real, 1.0, positive("lambda")},
                {"p0_tol", Kind::real, 0.005, positive("p0_tol")},
                {"p1_tol", Kind::real, 0.004, positive("p1_tol")},
                {"min_pvalue", Kind::real, 0.001, in_open_unit("min_pvalue")}};
      }
      if (name == "cascade-tail") {
        return {{"offspring_mean", Kind::real, 1.0, positive("offspring_mean")},
                {"root_mean", Kind::real, 1.0, positive("root_mean")},
                {"progeny_cap", Kind::integer, 1'000'000'000'000, at_least("progeny_cap", 1.0, "1")},
                {"expected_slope", Kind::real, -0.5, none()},
                {"tol", Kind::real, 0.1, positive("tol")}};
      }
      if (name == "volume-scan") {
        return {{"lambda", Kind::real, 1.0, positive("lambda")},
                {"R", Kind::real, 30.0, positive("R")},
                {"delta", Kind::real, 0.5, positive("delta")},
                {"horizon", Kind::real, 100.0, at_least("horizon", 0.0, "0")},
                {"step", Kind::real, 1.0, positive("step")}};
      }
      return {};
    case Command::analyze:
      if (name == "mass-audit") {
        return {{"input_dir", Kind::text, nullptr, none()}};
      }
      if (name == "quantiles") {
        return {{"input_dir", Kind::text, nullptr, none()},
                {"step", Kind::real, 1.0, positive("step")},
                {"horizon", Kind::real, 0.0, at_least("horizon", 0.0, "0")}};
      }
      if (name == "stall") {
        return {{"input", Kind::text, nullptr, none()},
                {"alpha", Kind::real, 0.5, in_open_unit("alpha")},
                {"beta", Kind::real, 0.0, at_least("beta", 0.0, "0")},
                {"T0", Kind::real, 0.0, at_least("T0", 0.0, "0")}};
      }
      if (name == "growth") {
        return {{"input_dir", Kind::text, nullptr, none()},
                {"t_min", Kind::real, 50.0, positive("t_min")},
                {"t_max", Kind::real, 500.0, positive("t_max")},
                {"slope_lo", Kind::real, 0.4, none()},
                {"slope_hi", Kind::real, 0.6, none()}};
      }
      return {};
  }
  return {};
}

bool type_ok(Kind k, const Json& v) {
  switch (k) {
    case Kind::real: return v.is_number();
    case Kind::integer: return v.is_number_integer() && !(v.is_number_integer() && v.get<std::int64_t>() < 0 && v.is_number_unsigned());
    case Kind::boolean: return v.is_boolean();
    case Kind::text: return v.is_string();
    case Kind::real_list:
      if (!v.is_array()) return false;
      for (const auto& x : v) {
        if (!x.is_number()) return false;
      }
      return true;
    case Kind::pair_list:
      if (!v.is_array()) return false;
      for (const auto& x : v) {
        if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number()) return false;
      }
      return true;
  }
  return false;
}

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::real: return "a number";
    case Kind::integer: return "an integer";
    case Kind::boolean: return "a boolean";
    case Kind::text: return "a string";
    case Kind::real_list: return "a list of numbers";
    case Kind::pair_list: return "a list of [inner, outer] pairs";
  }
  return "?";
}

std::optional<std::uint64_t> read_count(const Json& doc, const char* key, std::uint64_t fallback,
                                        std::uint64_t min, std::vector<std::string>& errors) {
  if (!doc.contains(key)) return fallback;
  const Json& v = doc.at(key);
  if (!v.is_number_integer()) {
    errors.push_back(std::string(key) + " must be an integer");
    return std::nullopt;
  }
  if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
    const auto x = v.get<std::uint64_t>();
    if (x >= min) return x;
  }
  errors.push_back(std::string(key) + " >= " + std::to_string(min));
  return std::nullopt;
}

void cross_checks(Command c, const std::string& name, const Json& p,
                  std::vector<std::string>& errors) {
  auto num = [&](const char* k) { return p.at(k).get<double>(); };
  if (c == Command::simulate_exact) {
    if (num("sim_radius") > 0.0 && !(num("sim_radius") > num("target_radius_hint"))) {
      errors.push_back("sim_radius > target_radius_hint");
    }
  }
  if (c == Command::simulate_box) {
    if (num("dt") > num("horizon")) errors.push_back("dt <= horizon");
  }
  if (c == Command::estimate && name == "kurtz") {
    for (const auto& a : p.at("annuli")) {
      const double lo = a[0].get<double>(), hi = a[1].get<double>();
      if (!(lo >= num("pool_radius")) || !(hi > lo)) {
        errors.push_back("annuli must satisfy pool_radius <= inner < outer");
        break;
      }
    }
  }
  if (c == Command::estimate && name == "hazard") {
    for (const auto& r : p.at("radii")) {
      if (!(r.get<double>() >= kR0)) {
        errors.push_back("radii >= 1/sqrt(pi)");
        break;
      }
    }
  }
  if (c == Command::estimate && name == "refill") {
    const auto& pr = p.at("probe");
    if (pr.size() != 2 || !(pr[0].get<double>() >= 0.0) ||
        !(pr[1].get<double>() > pr[0].get<double>())) {
      errors.push_back("probe must be [inner, outer] with 0 <= inner < outer");
    }
  }
  if (c == Command::analyze && name == "growth") {
    if (!(num("t_max") > num("t_min"))) errors.push_back("t_max > t_min");
  }
  if (c == Command::analyze && name == "stall") {
    const double b = num("beta");
    if (b != 0.0 && !(b < 1.0)) errors.push_back("0 < beta < 1");
  }
}

}  // namespace

std::vector<std::string> estimator_names() {
  return {"kurtz", "hazard", "refill", "hitting", "entered",
          "lln", "cascade-law", "cascade-tail", "volume-scan"};
}

std::vector<std::string> analysis_names() { return {"mass-audit", "quantiles", "stall", "growth"}; }

ExperimentConfig parse_config(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError({std::string("malformed JSON: ") + ex.what()});
  }
  return parse_config(doc);
}

ExperimentConfig parse_config(const Json& doc) {
  std::vector<std::string> errors;
  if (!doc.is_object()) throw ConfigError({"configuration must be a JSON object"});

  static const std::vector<std::string> top = {"command", "name", "parameters", "replicas",
                                               "workers", "master_seed", "output_dir"};
  for (const auto& [k, v] : doc.items()) {
    if (std::find(top.begin(), top.end(), k) == top.end()) {
      errors.push_back("unknown key '" + k + "'");
    }
  }

  ExperimentConfig cfg;
  bool command_ok = false;
  if (!doc.contains("command")) {
    errors.push_back("missing required key 'command'");
  } else if (!doc["command"].is_string()) {
    errors.push_back("command must be a string");
  } else if (auto c = parse_command(doc["command"].get<std::string>())) {
    cfg.command = *c;
    command_ok = true;
  } else {
    errors.push_back("unknown command '" + doc["command"].get<std::string>() + "'");
  }

  if (doc.contains("name")) {
    if (doc["name"].is_string()) {
      cfg.name = doc["name"].get<std::string>();
    } else {
      errors.push_back("name must be a string");
    }
  }
  if (command_ok) {
    if (cfg.command == Command::estimate || cfg.command == Command::analyze) {
      const auto names = cfg.command == Command::estimate ? estimator_names() : analysis_names();
      if (cfg.name.empty()) {
        errors.push_back("missing required key 'name' for " + std::string(to_string(cfg.command)));
        command_ok = false;
      } else if (std::find(names.begin(), names.end(), cfg.name) == names.end()) {
        errors.push_back("unknown " + std::string(to_string(cfg.command)) + " name '" + cfg.name +
                         "'");
        command_ok = false;
      }
    } else if (!cfg.name.empty()) {
      errors.push_back("'name' is only valid for estimate and analyze");
    }
  }

  if (auto v = read_count(doc, "replicas", 1, 1, errors)) cfg.replicas = *v;
  if (auto v = read_count(doc, "workers", 1, 1, errors)) cfg.workers = *v;
  if (auto v = read_count(doc, "master_seed", 0, 0, errors)) cfg.master_seed = *v;
  if (doc.contains("output_dir")) {
    if (doc["output_dir"].is_string()) {
      cfg.output_dir = doc["output_dir"].get<std::string>();
    } else {
      errors.push_back("output_dir must be a string");
    }
  }

  Json params = Json::object();
  if (doc.contains("parameters")) {
    if (doc["parameters"].is_object()) {
      params = doc["parameters"];
    } else {
      errors.push_back("parameters must be an object");
    }
  }

  if (command_ok) {
    const auto schema = schema_for(cfg.command, cfg.name);
    Json norm = Json::object();
    bool types_ok = true;
    for (const auto& [k, v] : params.items()) {
      const bool known = std::any_of(schema.begin(), schema.end(),
                                     [&](const Param& p) { return p.key == k; });
      if (!known) errors.push_back("unknown key 'parameters." + k + "'");
    }
    for (const auto& p : schema) {
      if (!params.contains(p.key)) {
        if (p.fallback.is_null()) {
          errors.push_back("missing required key 'parameters." + p.key + "'");
          types_ok = false;
        } else {
          norm[p.key] = p.fallback;
        }
        continue;
      }
      const Json& v = params.at(p.key);
      if (!type_ok(p.kind, v)) {
        errors.push_back("parameters." + p.key + " must be " + std::string(kind_name(p.kind)));
        types_ok = false;
        continue;
      }
      if (p.kind == Kind::integer && v.is_number_integer() && !v.is_number_unsigned() &&
          v.get<std::int64_t>() < 0) {
        errors.push_back(p.key + " >= 0");
        types_ok = false;
        continue;
      }
      norm[p.key] = v;
      if (p.kind == Kind::real && !std::isfinite(v.get<double>())) {
        errors.push_back("parameters." + p.key + " must be finite");
        types_ok = false;
        continue;
      }
      if (p.check) {
        if (auto bad = p.check(v)) {
          errors.push_back(*bad);
          types_ok = false;
        }
      }
    }
    if (types_ok) cross_checks(cfg.command, cfg.name, norm, errors);
    cfg.parameters = norm;
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

ExactConfig exact_config(const ExperimentConfig& cfg, std::uint64_t replica) {
  const auto& p = cfg.parameters;
  ExactConfig e;
  e.lambda = p.at("lambda").get<double>();
  e.horizon = p.at("horizon").get<double>();
  e.target_radius_hint = p.at("target_radius_hint").get<double>();
  e.cap = p.at("cap").get<std::uint64_t>();
  e.scheduler = parse_scheduler(p.at("scheduler").get<std::string>());
  e.audit = p.at("audit").get<bool>();
  e.master_seed = cfg.master_seed;
  e.stream_index = replica;
  const double r = p.at("sim_radius").get<double>();
  e.sim_radius = r > 0.0 ? r : sim_radius_for_bound(e, p.at("truncation_tolerance").get<double>());
  return e;
}

BoxConfig box_config(const ExperimentConfig& cfg, std::uint64_t replica) {
  const auto& p = cfg.parameters;
  BoxConfig b;
  b.lambda = p.at("lambda").get<double>();
  b.box_side = p.at("box_side").get<double>();
  b.dt = p.at("dt").get<double>();
  b.horizon = p.at("horizon").get<double>();
  b.kinematics = parse_kinematics(p.at("kinematics").get<std::string>());
  b.cap = p.at("cap").get<std::uint64_t>();
  b.audit = p.at("audit").get<bool>();
  b.master_seed = cfg.master_seed;
  b.stream_index = replica;
  return b;
}

}  // namespace poolsim
