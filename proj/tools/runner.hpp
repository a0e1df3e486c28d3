#pragma once

#include "config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace robarb::cli {

struct CheckResult {
  std::string name;
  bool pass = true;
  bool acceptance = true; // failing acceptance checks make the run exit nonzero
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct RunOutcome {
  std::filesystem::path directory;
  std::vector<CheckResult> checks;
  bool pass() const;
};

// Runs one experiment and writes manifest.json, report.json and the CSV
// artifacts into cfg.output.
RunOutcome run(const RunConfig& cfg);

} // namespace robarb::cli
