#pragma once

#include <string>
#include <vector>

namespace ppodice {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Oracle property suites: visitation fixed point on the built-in MDPs,
/// the performance-difference identity and the lower-bound chain on random
/// triples, conjugate correctness, and exact-witness divergence recovery.
std::vector<CheckResult> run_verification(unsigned long long seed = 0);

}  // namespace ppodice
