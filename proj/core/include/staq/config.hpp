#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "staq/model.hpp"

namespace staq {

/// Contents of a run configuration file. Relative paths are resolved against
/// the directory of the configuration file.
struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path output;
  ModelSpec model;
  /// Existing elicitation JSON to reuse instead of simulating.
  std::optional<std::filesystem::path> elicitation_file;
  /// Worker threads for (tau, chain) pairs; 0 means hardware concurrency.
  int threads = 0;
};

/// Parse and validate JSON text. Unknown keys and type mismatches raise
/// ConfigError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form with every field explicit (manifest snapshot). It
/// parses back to the same configuration.
std::string config_to_json(const RunConfig& config);

}  // namespace staq
