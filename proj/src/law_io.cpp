#include "geoparc/law_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "geoparc/error.hpp"

namespace geoparc {

namespace {

using nlohmann::json;

// Returns the numeric value and its exact decimal text.
std::pair<double, std::string> read_number(const json& v, const std::string& key) {
  if (v.is_number_integer()) return {v.get<double>(), std::to_string(v.get<long long>())};
  if (v.is_number()) {
    double d = v.get<double>();
    return {d, to_string(rational_from_double(d))};
  }
  if (v.is_string()) {
    auto text = v.get<std::string>();
    try {
      Rational r = parse_rational(text);
      return {r.get_d(), to_string(r)};
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadParam, "'" + key + "' is not a number: " + text);
    }
  }
  throw Error(ErrorCode::BadParam, "'" + key + "' must be a number");
}

std::vector<double> read_array(const json& v, const std::string& key, std::vector<std::string>* texts) {
  if (!v.is_array()) throw Error(ErrorCode::BadParam, "'" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& item : v) {
    auto [d, text] = read_number(item, key);
    out.push_back(d);
    if (texts) texts->push_back(text);
  }
  return out;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& family) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw Error(ErrorCode::BadParam, "key '" + it.key() + "' is not used by family " + family);
    }
  }
}

const json& require(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::BadParam, "missing key '" + key + "'");
  return *it;
}

}  // namespace

LawSpec law_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadParam, "law spec must be a JSON object");
  const auto& fam = require(j, "family");
  if (!fam.is_string()) throw Error(ErrorCode::BadParam, "'family' must be a string");
  LawSpec spec;
  auto name = fam.get<std::string>();
  spec.family = family_from_string(name);
  switch (spec.family) {
    case Family::binary:
    case Family::geometric:
    case Family::poisson: {
      check_keys(j, {"family", "alpha"}, name);
      auto [a, text] = read_number(require(j, "alpha"), "alpha");
      spec.alpha = a;
      if (spec.family != Family::poisson) spec.alpha_text = text;
      break;
    }
    case Family::custom:
      check_keys(j, {"family", "coeffs"}, name);
      spec.coeffs = read_array(require(j, "coeffs"), "coeffs", &spec.coeff_texts);
      break;
    case Family::stable:
      check_keys(j, {"family", "alpha", "rho", "C", "P"}, name);
      spec.alpha = read_number(require(j, "alpha"), "alpha").first;
      spec.rho = read_number(require(j, "rho"), "rho").first;
      spec.C = read_number(require(j, "C"), "C").first;
      spec.P = read_array(require(j, "P"), "P", nullptr);
      break;
  }
  return spec;
}

json to_json(const LawSpec& spec) {
  json j;
  j["family"] = std::string(to_string(spec.family));
  switch (spec.family) {
    case Family::binary:
    case Family::geometric:
    case Family::poisson:
      j["alpha"] = spec.alpha;
      break;
    case Family::custom:
      j["coeffs"] = spec.coeffs;
      break;
    case Family::stable:
      j["alpha"] = spec.alpha;
      j["rho"] = spec.rho;
      j["C"] = spec.C;
      j["P"] = spec.P;
      break;
  }
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadParam, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

LawSpec load_law_spec(const std::string& path) { return law_spec_from_json(read_json_file(path)); }

ArrivalLaw load_law(const std::string& path) { return ArrivalLaw::from_spec(load_law_spec(path)); }

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadParam, "experiment config must be a JSON object");
  check_keys(j, {"law", "q", "samples", "cap_height", "K", "seed"}, "experiment config");
  ExperimentConfig cfg;
  cfg.law = law_spec_from_json(require(j, "law"));
  cfg.q = read_number(require(j, "q"), "q").first;
  auto integer = [&](const char* key, auto& field) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_number_integer()) throw Error(ErrorCode::BadParam, std::string("'") + key + "' must be an integer");
    field = it->get<std::decay_t<decltype(field)>>();
  };
  integer("samples", cfg.samples);
  integer("cap_height", cfg.cap_height);
  integer("K", cfg.K);
  integer("seed", cfg.seed);
  if (cfg.samples <= 0 || cfg.cap_height <= 0 || cfg.K < 0) {
    throw Error(ErrorCode::BadParam, "samples and cap_height must be positive, K nonnegative");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_json_file(path));
}

}  // namespace geoparc
