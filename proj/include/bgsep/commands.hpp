#pragma once

// Subcommands behind the `bgsep` executable. Each returns a process exit code
// and reports errors on `err` instead of throwing.

#include "bgsep/simulator.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace bgsep {

inline constexpr const char* tool_version = "0.1.0";

/// Flags shared by every subcommand; unset fields fall back to the config.
struct CommandOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> instance_dir;
    std::optional<std::string> out_dir;
    std::optional<double> q;
    std::optional<double> delta;
    std::optional<double> rank_tol;
    std::optional<std::uint64_t> seed_support;
    std::optional<std::uint64_t> seed_coeff;
    std::optional<std::uint64_t> seed_noise;
    std::optional<NoiseMode> noise_mode;
};

void apply_overrides(ExperimentConfig& config, const CommandOptions& opts);

/// --out, else $BGSEP_OUT_DIR, else `fallback`.
std::string resolve_out_dir(const CommandOptions& opts, const std::string& fallback);

/// Writes an instance bundle: config.ini, f_obs.csv, f_clean.csv, f_V.csv,
/// g.csv, noise.csv, support.csv and manifest.json.
void write_bundle(const std::string& dir, const PlantedInstance& inst);
PlantedInstance read_bundle(const std::string& dir, const ModelSpaces& spaces,
                            const ExperimentConfig& config);
ExperimentConfig read_bundle_config(const std::string& dir);

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_svd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_project(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_separate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_experiment(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace bgsep
