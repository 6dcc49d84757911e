#pragma once

#include <string>

#include "agesched/config.hpp"

namespace agesched {

/// Options shared by the CLI subcommands; zero values keep config defaults.
struct CommandOptions {
    std::string out_dir;         ///< overrides config output.dir when non-empty
    std::uint64_t seed = 0;      ///< overrides simulation.base_seed when non-zero
    int jobs = 1;
    std::int64_t trace_slots = 0;  ///< simulate: also dump a per-slot trace this long
};

/// Writes (delta, h) rows for delta in [1, delta_max]. Returns the CSV path.
std::string cmd_error_curve(const ExperimentConfig& config, const CommandOptions& opts);

/// Solves the optimal mapping and threshold for the configured channel,
/// writes the policy artifact (JSON) and the index table (CSV), prints a
/// summary. Returns the artifact path.
std::string cmd_solve(const ExperimentConfig& config, const CommandOptions& opts);

/// Replays a solved artifact through the simulator, one row per seed.
/// Returns the report CSV path. Throws ValidationError on an artifact/config
/// hash mismatch.
std::string cmd_simulate(const ExperimentConfig& config, const std::string& artifact_path,
                         const CommandOptions& opts);

/// Three-policy alpha sweep with costs normalized by the memoryless
/// baseline. Returns the CSV path.
std::string cmd_sweep(const ExperimentConfig& config, const CommandOptions& opts);

/// Solves the configured instance, runs the value-iteration oracle against
/// it and reports agreement. Returns true when the policy matches the
/// oracle's greedy actions up to ties.
bool cmd_oracle_check(const ExperimentConfig& config, const CommandOptions& opts);

}  // namespace agesched
