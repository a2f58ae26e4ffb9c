#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace irsq::cli {

struct CheckResult {
  std::string name;
  int passed = 0;
  int total = 0;
  double worst = 0.0;  // largest error seen, in the check's own units
};

/// Gradient vs central differences, homogenization consistency and the
/// determinant form of the rate, on seeded random instances.
std::vector<CheckResult> run_selftest(std::uint64_t seed);

}  // namespace irsq::cli
