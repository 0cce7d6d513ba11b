// Ensemble runner: executes a validated experiment and writes its artifacts.
//
// Layout of an output directory:
//   manifest.json            config echo, code version, per-replica seeds
//   reports.json             array of StatReport objects
//   trajectories/replica_NNNN.{csv,jsonl}   (simulation commands)
//   quantiles.csv            (simulation commands, analyze quantiles)
//   extinction.csv, progeny.csv              (branching)
// Nothing in an artifact depends on the worker count or on wall time.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "poolsim/config.hpp"
#include "poolsim/stats.hpp"

namespace poolsim {

enum class LogLevel { quiet, info, debug };

/// Raised when the output directory cannot be created or written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnsembleResult {
  std::filesystem::path output_dir;
  std::vector<StatReport> reports;
  /// 0 when every verdict is pass or inconclusive, 1 otherwise.
  int exit_code = 0;
};

/// Version string recorded in manifests.
std::string code_version();

/// `<root>/<command>[-<name>]-seed<master_seed>`, with root taken from
/// POOLSIM_OUTPUT_ROOT (default "poolsim-output").
std::filesystem::path default_output_dir(const ExperimentConfig& cfg);

/// Runs the experiment. The output directory is probed for writability
/// before any simulation work; failure raises OutputError.
EnsembleResult run_ensemble(const ExperimentConfig& cfg, LogLevel log = LogLevel::quiet);

/// Trajectory CSVs (replica_*.csv) in a directory, sorted by file name.
std::vector<std::filesystem::path> trajectory_files(const std::filesystem::path& dir);

}  // namespace poolsim
