#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace shortfall {

// One acceptance criterion outcome: a role name, a verdict, and a one-line
// measurement summary (the same text that goes to the log).
struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  bool all_pass = false;
};

// Runs the full acceptance suite: rate reproductions against closed-form
// oracles, bound dominance, oracle equivalence on random configurations, and
// the invariant checks. Writes experiment outputs under out_dir and one
// [PASS]/[FAIL] line per criterion to log. Deterministic in (seed, out_dir);
// jobs only changes scheduling, never results.
AcceptanceReport run_acceptance(std::uint64_t seed, int jobs,
                                const std::string& out_dir, std::ostream& log);

}  // namespace shortfall
