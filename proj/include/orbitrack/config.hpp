#ifndef ORBITRACK_CONFIG_HPP
#define ORBITRACK_CONFIG_HPP

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

// Run configuration: strict JSON schema (unknown keys are rejected with the
// offending key named), defaults materialized into the manifest.

namespace orbitrack {

struct CliOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;
};

/// Parses and validates a config file against the command's schema; throws
/// StructuralError naming unknown or missing keys.
nlohmann::json load_config(const std::filesystem::path& path, const std::string& command);

/// Resolved copy with every default filled in (what the run actually used).
nlohmann::json materialize_defaults(const nlohmann::json& cfg, const std::string& command);

/// Runs a command. Returns the process exit code (0 ok, 2 validation error,
/// 3 numerical failure).
int run_command(const std::string& command, const CliOptions& opts);

}  // namespace orbitrack

#endif  // ORBITRACK_CONFIG_HPP
