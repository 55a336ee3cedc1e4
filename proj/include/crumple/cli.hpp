#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace crumple::cli {

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  std::int64_t samples = 20000;
  std::int64_t grid_steps = 0;            // 0 = per-module default
  std::vector<std::int64_t> n_list;       // empty = per-module default
  std::string module = "all";             // afp|isometry|chaos|euler|all
  std::string theta = "cosine";           // cosine|sine|rademacher
  std::string map = "sign1d";             // sign1d|rotation2d
  std::string out_dir = "out";
};

// Invalid configuration; the CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Criterion {
  std::string id;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<Criterion> criteria;
  bool all_pass = true;
  std::map<std::string, double> timings_sec;
};

// Flat key=value file; '#' starts a comment. Keys mirror the config
// fields: seed, samples, grid, n (comma separated), module, theta, map,
// out.
ExperimentConfig load_config_file(const std::string& path);

void validate(const ExperimentConfig& config);

// Runs the selected module experiments, writes one CSV per table plus
// summary.json into out_dir, and returns the verdicts. CSV bodies are a
// pure function of the config.
RunReport run(const ExperimentConfig& config);

}  // namespace crumple::cli
