#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qn {

// One self-check suite.  max_residual is the worst defect the suite measured
// (when that makes sense); detail is a one-line deterministic summary, so a
// report for a fixed seed is byte-stable.
struct SuiteResult {
  std::string name;
  bool pass = false;
  double max_residual = 0.0;
  std::string detail;
};

// Registered suite names, in execution order.
std::vector<std::string> verify_suite_names();

// Run one suite; throws std::invalid_argument for an unknown name.
SuiteResult run_verify_suite(const std::string& name, std::uint64_t seed);

std::vector<SuiteResult> run_all_suites(std::uint64_t seed);

// Deterministic JSON report (same seed -> same bytes).
std::string suites_report_json(const std::vector<SuiteResult>& results, std::uint64_t seed);

}  // namespace qn
