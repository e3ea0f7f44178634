#pragma once
// Invariant suites shared by the self-test, the algebra-check task and the
// acceptance run.
#include <cstdint>
#include <string>
#include <vector>

#include "nctori/theta.hpp"

namespace nctori {

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;
};

struct CheckSuite {
  std::string name;
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Associativity, unit, involution, traciality, tau o delta_j = 0, integration
/// by parts and the Leibniz rule on seeded elements filling |k|_inf <= K/2, so
/// every product stays inside |k|_inf <= K. Errors are relative to the norms
/// of the factors; the worst trial is reported.
CheckSuite algebra_checks(const ThetaPtr& theta, int K, int trials, std::uint64_t seed, double tol = 1e-12);

/// Small-K suites for every module.
std::vector<CheckSuite> selftest_suites(std::uint64_t seed);

}  // namespace nctori
