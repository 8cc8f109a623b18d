#pragma once

#include <string>
#include <vector>

namespace olpi {

enum class VerifySuite { oracle, invariants, all };

struct VerifyCheck {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double seconds = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool all_passed() const {
    for (const auto& c : checks) {
      if (!c.skipped && !c.passed) return false;
    }
    return true;
  }
  int failures() const {
    int n = 0;
    for (const auto& c : checks) n += (!c.skipped && !c.passed) ? 1 : 0;
    return n;
  }
};

// Runs the seeded oracle-equivalence and invariant checks; checks that would
// start after the budget is exhausted are reported as skipped.
VerifyReport run_verify(VerifySuite suite, double budget_seconds);

std::string verify_table(const VerifyReport& report);

}  // namespace olpi
