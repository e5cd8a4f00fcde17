#pragma once

// Flat `[section]` / `key = value` configuration files for ExperimentConfig.
// Unknown sections or keys are errors; every diagnostic names the line.

#include "bgsep/simulator.hpp"

#include <iosfwd>
#include <string>

namespace bgsep {

ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig parse_config_text(const std::string& text);

/// Reads a config file, or the embedded config of a run manifest (JSON).
ExperimentConfig load_config(const std::string& path);

/// Canonical text form; parse_config_text(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& config);

const char* to_string(SplineNormalization v);
const char* to_string(NoiseMode v);
const char* to_string(NoiseReference v);
const char* to_string(DeltaPolicy v);

NoiseMode parse_noise_mode(const std::string& s);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace bgsep
