#pragma once

#include "pear/problems.hpp"
#include "pear/verify.hpp"

namespace pear {

/// Brute-force oracles used to certify the dynamic programs.
DecisionOutcome enumerate_grid_paths(const GridPathProblem& p, const Vector& costs);
DecisionOutcome enumerate_knapsack(const KnapsackProblem& p, const Vector& values);

/// Randomized check families. Each aggregates `instances` draws into one
/// report carrying the worst error observed.
CheckReport suite_projection_identities(int instances, std::uint64_t seed);
CheckReport suite_theorem1_fd(int instances, std::uint64_t seed);
CheckReport suite_schur_vs_dense(int instances, std::uint64_t seed, bool inject_bug = false);
CheckReport suite_lp_consistency(int instances, std::uint64_t seed);
CheckReport suite_normal_filtering(int instances, std::uint64_t seed);
CheckReport suite_normal_invariance(int instances, std::uint64_t seed);
CheckReport suite_mse_decomposition(int instances, std::uint64_t seed);
CheckReport suite_exact_oracles(std::uint64_t seed);

}  // namespace pear
