#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arcs/balance.hpp"
#include "arcs/numerics.hpp"
#include "arcs/rng.hpp"
#include "arcs/selected_set.hpp"
#include "arcs/selection.hpp"

namespace arcs::engine {

enum class Method { cr, rr, arm, cov, arcs_m, arcs_cov, arcs_m_add, arcs_cov_add };

std::string_view method_name(Method m);
/// Accepts the names produced by method_name, case-insensitively.
std::optional<Method> parse_method(std::string_view name);
std::vector<Method> all_methods();

/// ARCS-M, ARCS-COV and their additive variants.
bool is_arcs(Method m);
/// Pairwise Mahalanobis assignment: ARM and the ARCS-M family.
bool is_pairwise(Method m);
/// Methods whose natural metric is the Mahalanobis imbalance.
bool is_m_family(Method m);

struct TrialConfig {
    std::size_t n = 120;
    std::size_t p = 10;
    std::size_t N0 = 30;
    std::size_t N = 10;
    double rho = 0.85;
    balance::PhiSpec phi{};
    Method method = Method::arcs_cov;
    selection::SelectionOptions selection{};  // mode is implied by method
    double rr_accept_prob = 0.001;
    std::size_t rr_max_draws = 1000000;
    double pinv_tol = numerics::kDefaultPinvTol;
    std::uint64_t seed = 42;
    /// Disables selection: every batch uses this set.
    std::optional<SelectedSet> fixed_selection;

    selection::Mode selection_mode() const;
    std::size_t batches() const;  // (n - N0) / N for ARCS methods

    /// Throws ErrorCode::config naming the offending fields.
    void validate() const;
};

/// Covariate row i (0-based), length p. Called once per patient in order.
using CovariateStream = std::function<Vector(std::size_t i)>;
/// Outcome for patient i with covariates x under `arm`.
using OutcomeOracle = std::function<double(std::size_t i, const Vector& x, int arm)>;

inline constexpr int kUnassigned = -1;

struct TrialState {
    Matrix covariates;             // n x p; rows beyond `revealed` are zero
    std::vector<int> assignments;  // 0, 1 or kUnassigned
    Vector outcomes;
    std::size_t revealed = 0;
    std::size_t assigned = 0;
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    SelectedSet selected;
    balance::ImbalanceState imbalance;
    std::size_t batch_index = 0;
    std::vector<SelectedSet> selection_history;  // J(0), J(1), ..., one per fit
    std::vector<bool> stale_history;
    std::size_t rr_draws = 0;

    TrialState() = default;
    TrialState(std::size_t n, std::size_t p);
};

/// Returns 1 with probability rho when delta < 0, 1 - rho when delta > 0 and
/// 0.5 on a tie. Exactly one uniform is consumed.
int biased_coin(double delta, double rho, UniformSource& rng, bool tie = false);

/// Arm-1 probability implied by biased_coin.
double coin_probability(double delta, double rho, bool tie);

/// Morgan-Rubin acceptance threshold: the chi-square(p) quantile at prob.
double rr_threshold(std::size_t p, double prob);

/// (n1 n0 / n) d' Sigma^+ d over all p columns.
double rr_statistic(const Matrix& X, std::span<const int> assignments,
                    double tol = numerics::kDefaultPinvTol);

struct TrialInputs {
    CovariateStream covariates;
    OutcomeOracle outcome;
    UniformSource& design;  // coin flips and pair orientations
    Rng& selection;         // cross-validation fold shuffles
};

TrialState run_arcs(const TrialConfig& config, TrialInputs in);
TrialState run_arcs_m(const TrialConfig& config, TrialInputs in);
TrialState run_cr(const TrialConfig& config, TrialInputs in);
TrialState run_rr(const TrialConfig& config, TrialInputs in);
TrialState run_arm(const TrialConfig& config, TrialInputs in);
TrialState run_cov(const TrialConfig& config, TrialInputs in);

/// Dispatches on config.method.
TrialState run_trial(const TrialConfig& config, TrialInputs in);

}  // namespace arcs::engine
