#pragma once

// Named validation suites. Each checks one library property against an
// independent oracle and reports pass/fail with the measured quantities.

#include <cstdint>
#include <string>
#include <vector>

#include "psou/serialize.hpp"

namespace psou::cli {

struct SuiteResult {
  std::string name;
  std::string description;
  bool passed = false;
  Json metrics = Json::object();
  double seconds = 0.0;  // wall time, not serialized into reports
};

const std::vector<std::string>& suite_names();
/// Throws kConfig for an unknown suite name.
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

Json to_json(const SuiteResult& r);

}  // namespace psou::cli
