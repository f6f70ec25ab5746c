#pragma once

// Run configuration files: a TOML subset (sections, key = value, strings,
// booleans, numbers, flat arrays, '#' comments). Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "saas/bench.hpp"
#include "saas/saas_core.hpp"

namespace saas {

struct RunConfig {
  SaasConfig saas;
  bench::DatasetSpec dataset;
  bench::SplitSpec split;
  bench::CorruptionParams corruption;
  bench::OuterEpochParams outer_epoch;
  bench::SweepParams sweep;
  std::size_t n_seeds = 3;  // saas and baseline subcommands
  std::string output_dir;   // empty: decided by the CLI
  std::size_t jobs = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a document. Errors are ConfigError with kind parse or constraint.
RunConfig parse_config_text(const std::string& text);

/// Reads `path` (ConfigError::Kind::missing_file if unreadable) and parses it.
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical document that parses back to an equal RunConfig.
std::string serialize_config(const RunConfig& cfg);

/// Result-relevant settings as JSON (output_dir and jobs omitted).
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

}  // namespace saas
