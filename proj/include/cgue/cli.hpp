#pragma once

// Experiment plumbing behind the cgue executable: config loading, the six
// commands, and the exit-code contract (0 ok, 2 invalid input, 3 capacity
// guard, 4 numerical non-convergence).
//
// Config precedence: built-in defaults < config document < command-line flags.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cgue/io.hpp"

namespace cgue {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitCapacity = 3, kExitNumeric = 4 };

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  Index samples = 100;
  int threads = 1;
  std::string out;  ///< empty: $CGUE_OUTPUT_ROOT/<command>
  bool svg = false;
  json ensemble = json::object();
  json constraints = json::object();
  json stats = json::object();
  json critical = json::object();
  json density = json::object();
  json fp = json::object();
};

/// Unknown keys are rejected with InvalidArgument.
ExperimentConfig config_from_json(const json& j);
json to_json(const ExperimentConfig& c);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<Index> samples;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool svg = false;
};
void apply_overrides(ExperimentConfig& c, const CliOverrides& o);

EnsembleSpec ensemble_from_config(const ExperimentConfig& c);
/// Generators: none, random-traceless, random, diagonal-p, band-complement,
/// explicit (matrix file under "file", or unit-normalized "diagonals").
ConstraintSet constraints_from_config(const json& section, Index n, std::uint64_t default_seed);

std::filesystem::path output_dir(const ExperimentConfig& c);

struct CommandResult {
  std::filesystem::path dir;
  std::vector<std::string> files;  ///< data files, relative to dir
  json summary;
};

CommandResult cmd_sample(const ExperimentConfig& c);
CommandResult cmd_stats(const ExperimentConfig& c);
CommandResult cmd_critical(const ExperimentConfig& c);
CommandResult cmd_density(const ExperimentConfig& c);
CommandResult cmd_fp(const ExperimentConfig& c);
/// sample + stats in one directory.
CommandResult cmd_report(const ExperimentConfig& c);

/// Large-sample GUE reference at dimension n with the same report options.
FluctuationReport gue_reference_report(Index n, double lambda, Index samples, std::uint64_t seed, int threads,
                                       const ReportOptions& options);
ReportOptions report_options_from_config(const json& stats, Index samples, double lambda);

/// Runs c.command, writes manifest.json, prints the summary; maps
/// exceptions to exit codes with a diagnostic on err.
int run_command(const ExperimentConfig& c, std::ostream& out, std::ostream& err);

}  // namespace cgue
