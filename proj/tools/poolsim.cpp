// poolsim command-line entry point.
//
//   poolsim simulate-exact --config run.json [--workers 8] [--output-dir out]
//   poolsim estimate kurtz --config kurtz.json
//   poolsim analyze growth --config growth.json
//
// Exit status: 0 all verdicts pass or inconclusive, 1 some verdict failed,
// 2 usage or configuration error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "poolsim/config.hpp"
#include "poolsim/ensemble.hpp"
#include "poolsim/io.hpp"

namespace {

constexpr int kUsageError = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> workers;
  std::optional<std::string> output_dir;
  std::string log_level = "info";
  std::string name;
};

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("-c,--config", opt.config_path, "experiment configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("-w,--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("-o,--output-dir", opt.output_dir, "artifact directory");
  sub->add_option("--log-level", opt.log_level, "quiet, info or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
}

poolsim::LogLevel to_level(const std::string& s) {
  if (s == "quiet") return poolsim::LogLevel::quiet;
  if (s == "debug") return poolsim::LogLevel::debug;
  return poolsim::LogLevel::info;
}

int run(const std::string& command, const Options& opt) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(poolsim::read_text_file(opt.config_path));
  } catch (const std::exception& ex) {
    std::cerr << "error: " << opt.config_path << ": " << ex.what() << '\n';
    return kUsageError;
  }
  if (doc.is_object()) {
    if (!doc.contains("command")) doc["command"] = command;
    if (!opt.name.empty() && !doc.contains("name")) doc["name"] = opt.name;
  }

  poolsim::ExperimentConfig cfg;
  try {
    cfg = poolsim::parse_config(doc);
  } catch (const poolsim::ConfigError& ex) {
    std::cerr << opt.config_path << ": " << ex.what() << '\n';
    return kUsageError;
  }
  if (poolsim::to_string(cfg.command) != command) {
    std::cerr << "error: config is for '" << poolsim::to_string(cfg.command)
              << "' but the subcommand is '" << command << "'\n";
    return kUsageError;
  }
  if (!opt.name.empty() && cfg.name != opt.name) {
    std::cerr << "error: config names '" << cfg.name << "' but the command line names '"
              << opt.name << "'\n";
    return kUsageError;
  }
  if (opt.workers) cfg.workers = *opt.workers;
  if (opt.output_dir) cfg.output_dir = *opt.output_dir;

  try {
    const auto res = poolsim::run_ensemble(cfg, to_level(opt.log_level));
    std::cout << res.output_dir.string() << '\n';
    for (const auto& r : res.reports) {
      std::cout << r.name << '\t' << poolsim::to_string(r.verdict) << '\t'
                << poolsim::format_double(r.estimate) << '\n';
    }
    return res.exit_code;
  } catch (const poolsim::OutputError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kUsageError;
  } catch (const poolsim::ConfigError& ex) {
    std::cerr << ex.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kUsageError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-model aggregation simulator and verification harness"};
  app.set_version_flag("--version", poolsim::code_version());
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  for (const char* cmd : {"simulate-exact", "simulate-box", "branching"}) {
    auto* sub = app.add_subcommand(cmd);
    add_common(sub, opt);
    sub->callback([&chosen, cmd] { chosen = cmd; });
  }
  auto* est = app.add_subcommand("estimate", "run a statistical estimator");
  est->add_option("name", opt.name, "estimator")
      ->required()
      ->check(CLI::IsMember(poolsim::estimator_names()));
  add_common(est, opt);
  est->callback([&chosen] { chosen = "estimate"; });

  auto* an = app.add_subcommand("analyze", "analyse stored trajectories");
  an->add_option("name", opt.name, "analysis")
      ->required()
      ->check(CLI::IsMember(poolsim::analysis_names()));
  add_common(an, opt);
  an->callback([&chosen] { chosen = "analyze"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  try {
    return run(chosen, opt);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kUsageError;
  }
}
