#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace geoparc {

inline constexpr int kSchemaVersion = 1;

std::string version_string();

// Record of one CLI run, written as <output>.manifest.json.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::string version = version_string();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  double duration_seconds = 0.0;

  nlohmann::json to_json() const;
};

RunManifest manifest_from_json(const nlohmann::json& j);

std::string manifest_path_for(const std::string& output_path);
// Writes the manifest next to its first output and returns that path.
std::string write_manifest(const RunManifest& manifest);

}  // namespace geoparc
