// Acceptance binary: one line per criterion, nonzero exit if any fails.
#include <iostream>

#include "sdqi/acceptance.hpp"

int main() {
  const auto results = sdqi::run_acceptance({}, &std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << "summary: " << results.size() - failed << " passed, " << failed << " failed\n";
  return failed == 0 ? 0 : 1;
}
