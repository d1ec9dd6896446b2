#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sdqi {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240611;
  std::vector<int> only;  // empty: all ten
  int threads = 0;
};

// Runs the desk-scale acceptance criteria. Tolerances and sample sizes are fixed
// here; only the seed and the selection can change.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream* progress = nullptr);

void print_result(std::ostream& os, const CriterionResult& r);

}  // namespace sdqi
