// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <cstdlib>
#include <cstring>
#include <iostream>

#include "geoparc/acceptance.hpp"

int main(int argc, char** argv) {
  geoparc::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      options.quick = true;
    } else {
      options.only.push_back(std::atoi(argv[i]));
    }
  }
  int failed = 0;
  geoparc::run_acceptance(options, [&](const geoparc::CriterionResult& r) {
    std::cout << geoparc::format_result(r) << std::endl;
    if (!r.passed) ++failed;
  });
  std::cout << failed << " failed" << std::endl;
  return failed == 0 ? 0 : 1;
}
