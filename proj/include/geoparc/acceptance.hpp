#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace geoparc {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
  nlohmann::json data = nlohmann::json::object();
};

struct AcceptanceOptions {
  // Fewer supercritical trees in criterion 8; everything else is unchanged.
  bool quick = false;
  int threads = 0;
  std::uint64_t seed = 20240601;
  // Run only these criteria (1..10); empty runs all of them.
  std::vector<int> only;
};

inline constexpr int kCriterionCount = 10;

CriterionResult run_criterion(int id, const AcceptanceOptions& options);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS  3  oracle equivalence  (1.20 s / 120 s)  detail"
std::string format_result(const CriterionResult& result);
nlohmann::json to_json(const CriterionResult& result);

}  // namespace geoparc
