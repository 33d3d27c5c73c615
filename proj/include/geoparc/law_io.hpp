#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "geoparc/arrival_law.hpp"

namespace geoparc {

// Law files look like {"family": "geometric", "alpha": 0.2}. Keys that the
// family does not use are rejected. Numbers may also be written as strings
// ("1/6") to request exact rational coefficients.
LawSpec law_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LawSpec& spec);
LawSpec load_law_spec(const std::string& path);
ArrivalLaw load_law(const std::string& path);

struct ExperimentConfig {
  LawSpec law;
  double q = 0.0;
  long long samples = 100000;
  int cap_height = 30;
  int K = 10;
  std::uint64_t seed = 1;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace geoparc
