#pragma once

#include <functional>
#include <string>
#include <vector>

namespace milab::selfcheck {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  bool skipped = false;
};

/// Run the oracle and invariant suite. fast=true skips the Monte-Carlo heavy
/// checks. Deterministic order and results.
std::vector<CheckResult> run_selfcheck(bool fast);

/// Machine-readable summary; exit code contract: 0 iff no failures.
std::string selfcheck_json(const std::vector<CheckResult>& results,
                           std::int64_t wall_ms);

int count_failures(const std::vector<CheckResult>& results);

/// Max deviation of the quadrature Gram matrix of H_0..H_kmax from identity,
/// for an arbitrary evaluator. Exposed so a perturbed recurrence is seen to
/// break orthonormality.
double hermite_gram_max_dev(const std::function<double(int, double)>& eval,
                            int kmax, int nodes);

}  // namespace milab::selfcheck
