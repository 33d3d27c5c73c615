#include "geoparc/manifest.hpp"

#include "geoparc/error.hpp"
#include "geoparc/law_io.hpp"

namespace geoparc {

#ifndef GEOPARC_VERSION
#define GEOPARC_VERSION "0.0.0"
#endif

std::string version_string() { return GEOPARC_VERSION; }

nlohmann::json RunManifest::to_json() const {
  return {{"schema", kSchemaVersion},
          {"command", command},
          {"config", config},
          {"version", version},
          {"seed", seed},
          {"outputs", outputs},
          {"duration_seconds", duration_seconds}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", 0) != kSchemaVersion) {
    throw Error(ErrorCode::BadParam, "manifest: missing or unsupported schema");
  }
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.version = j.at("version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.duration_seconds = j.at("duration_seconds").get<double>();
  return m;
}

std::string manifest_path_for(const std::string& output_path) { return output_path + ".manifest.json"; }

std::string write_manifest(const RunManifest& manifest) {
  if (manifest.outputs.empty()) throw Error(ErrorCode::BadParam, "manifest without outputs");
  std::string path = manifest_path_for(manifest.outputs.front());
  write_text_file(path, manifest.to_json().dump(2) + "\n");
  return path;
}

}  // namespace geoparc
