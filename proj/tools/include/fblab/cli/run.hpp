#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fblab/cli/config.hpp"

namespace fblab::cli {

/// One output file held in memory until the run has finished.
struct Artifact {
  std::string path;  // relative to the output directory
  std::string content;
};

struct RunResult {
  std::vector<Artifact> artifacts;
  /// Checks that `--assert` turns into exit status 4.
  std::vector<std::string> violations;
  nlohmann::json summary = nlohmann::json::object();
};

/// Executes the scenario and returns everything it would write. Module
/// errors propagate with the scenario name prefixed to the message.
RunResult run(const ExperimentConfig& config);

/// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Config echo, version, one {path, bytes, sha256} entry per artifact and the wall time.
nlohmann::json build_manifest(const nlohmann::json& echo, const std::vector<Artifact>& artifacts,
                              double wall_seconds);

/// Creates the directory and writes every artifact followed by manifest.json,
/// all from the calling thread. Returns the manifest path. Throws IoError.
std::string write_outputs(const std::string& dir, const RunResult& result, const nlohmann::json& echo,
                          double wall_seconds);

/// Build version in `git describe` form (falls back to the project version).
std::string_view version_string() noexcept;

}  // namespace fblab::cli
