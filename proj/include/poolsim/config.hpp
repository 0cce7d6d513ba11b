// Experiment configuration documents.
//
// One JSON document per experiment:
//   {"command": "simulate-box", "parameters": {...}, "replicas": 20,
//    "master_seed": 1, "workers": 4, "output_dir": "out/box"}
// `estimate` and `analyze` also take "name". Parameters are checked against
// a per-command schema; defaults are filled in so the normalised document
// fully describes the run.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "poolsim/box_engine.hpp"
#include "poolsim/branching.hpp"
#include "poolsim/estimators.hpp"
#include "poolsim/exact_engine.hpp"

namespace poolsim {

enum class Command { simulate_exact, simulate_box, branching, estimate, analyze };

std::string_view to_string(Command c);
std::optional<Command> parse_command(std::string_view name);

/// Carries every validation problem found in a document.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  [[nodiscard]] const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct ExperimentConfig {
  Command command = Command::simulate_exact;
  std::string name;  // estimator / analysis name
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t replicas = 1;
  std::uint64_t workers = 1;
  std::uint64_t master_seed = 0;
  std::optional<std::string> output_dir;

  /// Normalised document without operational keys (workers, output_dir);
  /// identical for runs that must produce identical artifacts.
  [[nodiscard]] nlohmann::json echo() const;
};

/// Names accepted by `estimate` and `analyze`.
std::vector<std::string> estimator_names();
std::vector<std::string> analysis_names();

/// Parses and validates a JSON document. Throws ConfigError listing every
/// problem (malformed JSON is reported as a single error).
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config(const nlohmann::json& doc);

// Typed views of validated parameters for one replica.
ExactConfig exact_config(const ExperimentConfig& cfg, std::uint64_t replica);
BoxConfig box_config(const ExperimentConfig& cfg, std::uint64_t replica);

}  // namespace poolsim
