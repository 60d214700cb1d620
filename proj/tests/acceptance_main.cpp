// Runs every acceptance criterion and prints one line per criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "llt/acceptance.hpp"

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
  int failures = 0;
  for (int i = 1; i <= llt::kCriterionCount; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const llt::CheckReport r = llt::run_criterion(i, seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!r.ok()) ++failures;
    std::printf("criterion %2d %-24s %s  margin=%.3g  time=%.2fs\n", i, r.name.c_str(), r.ok() ? "PASS" : "FAIL",
                r.margin, secs);
    if (!r.ok()) std::printf("  %s\n", r.witnesses.dump().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", llt::kCriterionCount - failures, llt::kCriterionCount);
  return failures == 0 ? 0 : 1;
}
