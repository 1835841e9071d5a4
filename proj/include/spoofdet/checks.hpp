// Invariant checks backed by independent oracles (finite differences, grid
// search, brute-force recomputation). Used by `spoofdet check` and the
// acceptance suite.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spoofdet/dataset.hpp"

namespace spoofdet::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Swap symmetry of every detector on random models and pairs:
/// |g(f,f') - g(f',f)| <= 1e-9 (1 + |g|) and identical decisions.
CheckResult commutativity(std::size_t cases, std::uint64_t seed);

/// Backprop gradient of the symmetrized pair loss vs. central differences
/// (step 1e-5) on `coordinates` random parameters spread over all layers.
CheckResult gradient(std::size_t coordinates, std::uint64_t seed);

/// pair_loss == log 2 (within 1e-12) for an all-zero network on random
/// balanced pair sets.
CheckResult loss_anchor(std::size_t sets, std::uint64_t seed);

/// tune_threshold accuracy equals the best of a 10^4-point threshold grid.
CheckResult threshold_optimality(std::size_t sets, std::uint64_t seed);

/// Lloyd iterations never increase WCSS and end at an assignment fixpoint.
CheckResult kmeans_monotonicity(std::size_t corpora, std::uint64_t seed);

/// Mean |estimate - true RSS| over `seeds` windows is smaller at 1024 samples
/// than at 16.
CheckResult estimator_consistency(std::size_t seeds, std::uint64_t seed);

/// Always-H1 scores 0.5 +- 0.02 and the provenance oracle scores exactly 1 on
/// balanced test pairs drawn from `corpus`.
CheckResult harness_calibration(const MeasurementSet& corpus, std::size_t test_pairs_per_class,
                                std::uint64_t seed);

/// Fast versions of all of the above on the default synthetic scenario.
std::vector<CheckResult> run_all(std::uint64_t seed);

}  // namespace spoofdet::checks
