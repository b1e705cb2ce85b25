#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace arcs::checks {

/// Outcome of one property suite: `value` is the worst observed error (or
/// the statistic checked) and `limit` the tolerance it is held to.
struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
    std::string detail;
};

/// Coordinate-descent Lasso against an accelerated proximal-gradient
/// solve of the same objective; max coefficient difference.
CheckResult lasso_oracle(std::size_t instances, std::uint64_t seed);

/// Largest KKT violation of coordinate-descent Lasso fits.
CheckResult lasso_kkt(std::size_t instances, std::uint64_t seed);

/// Lambda kept incrementally by ARCS-COV trials against a recomputation
/// from the final assignments.
CheckResult incremental_lambda(std::size_t trials, std::uint64_t seed);

/// ||L + phi||^2 - ||L - phi||^2 against imb_delta.
CheckResult imb_delta_identity(std::size_t cases, std::uint64_t seed);

/// Mahalanobis imbalance under X -> X A + 1 b', relative change.
CheckResult mahalanobis_affine(std::size_t cases, std::uint64_t seed);

/// Moore-Penrose conditions for numerics::pinv on rank-deficient inputs.
CheckResult penrose(std::size_t cases, std::uint64_t seed);

/// Frequency of the preferred arm over `events` biased-coin draws.
CheckResult coin_frequency(std::size_t events, double rho, std::uint64_t seed);

/// Replication records and CSV output with 1 against 8 workers.
CheckResult worker_determinism(std::size_t reps, std::uint64_t seed);

/// All of the above at their standard sizes.
std::vector<CheckResult> run_all(std::uint64_t seed);

}  // namespace arcs::checks
