#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace oed {

enum class Suite { Oracle, Gradients, Benchmarks };

/// "oracle", "gradients", "benchmarks"; throws ArgumentError otherwise.
Suite parse_suite(const std::string& name);
std::string suite_name(Suite s);
/// Acceptance check ids in a suite: oracle 1-5, gradients 6-8,
/// benchmarks 9-12.
std::vector<int> suite_checks(Suite s);

struct ValidationOptions {
  std::uint64_t seed = 0;
  int runs = 200;      // Monte Carlo runs of the benchmark checks
  int restarts = 5;    // optimizer restarts of the benchmark designs
};

struct CheckResult {
  int id = 0;
  std::string title;
  bool passed = false;
  double seconds = 0.0;
  double time_limit = 0.0;  // seconds, 0 = none
  std::vector<std::string> details;
};

/// Runs the checks in order. Benchmark designs and reports are computed once
/// and shared; check 12 recomputes them from scratch and compares the CSV
/// bytes. `progress` (if set) receives each result as it completes.
std::vector<CheckResult> run_checks(
    const std::vector<int>& ids, const ValidationOptions& opts,
    const std::function<void(const CheckResult&)>& progress = {});

/// One line per check: id, PASS/FAIL, runtime, title.
void print_result_line(const CheckResult& r, std::ostream& out);
void print_summary(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace oed
