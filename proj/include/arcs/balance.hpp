#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "arcs/numerics.hpp"
#include "arcs/selected_set.hpp"

namespace arcs::balance {

enum class PhiKind { cov_family, mahalanobis_family };

/// Feature-map weights. cov_family uses (w0, w1, w2); mahalanobis_family
/// uses (w0, w1) with w2 = 0.
struct PhiSpec {
    PhiKind kind = PhiKind::cov_family;
    double w0 = 1.0 / 3.0;
    double w1 = 1.0 / 3.0;
    double w2 = 1.0 / 3.0;

    static PhiSpec cov(double w0, double w1, double w2) {
        return {PhiKind::cov_family, w0, w1, w2};
    }
    static PhiSpec mahalanobis(double w0 = 0.5, double w1 = 0.5) {
        return {PhiKind::mahalanobis_family, w0, w1, 0.0};
    }

    /// Non-negative weights summing to one within 1e-12.
    void validate() const;
};

constexpr std::size_t phi_dim(std::size_t s) { return 1 + s + s * s; }

/// (sqrt(w0), sqrt(w1) x', sqrt(w2) vec(x x')') with the outer product in
/// row-major order.
Vector phi_cov(std::span<const double> x, const PhiSpec& spec);

/// Row i of X restricted to the selected columns.
Vector restrict_row(const Matrix& X, Eigen::Index row, const SelectedSet& selected);
/// First `rows` rows of X restricted to the selected columns.
Matrix restrict(const Matrix& X, Eigen::Index rows, const SelectedSet& selected);

/// Running Lambda = sum_i (2 T_i - 1) phi(X_{i,J}) for one selected set.
class ImbalanceState {
   public:
    ImbalanceState() : ImbalanceState(PhiSpec{}, SelectedSet{}) {}
    ImbalanceState(PhiSpec spec, SelectedSet selected);

    const SelectedSet& selected() const { return selected_; }
    const PhiSpec& spec() const { return spec_; }
    const Vector& lambda_vec() const { return lambda_; }
    std::size_t dim() const { return static_cast<std::size_t>(lambda_.size()); }

    /// ||Lambda||^2
    double imbalance() const { return lambda_.squaredNorm(); }

    /// phi of row `row` of X restricted to this state's selected set.
    Vector phi_of(const Matrix& X, Eigen::Index row) const;

    /// Lambda += (2 arm - 1) phi
    void add(int arm, const Vector& phi);

    /// Recomputes Lambda from the first `count` rows of the raw covariate
    /// history under a (possibly new) selected set.
    void rebuild(const Matrix& X, std::span<const int> assignments, std::size_t count,
                 SelectedSet selected);

   private:
    PhiSpec spec_;
    SelectedSet selected_;
    Vector lambda_;
};

ImbalanceState update_lambda(ImbalanceState state, int arm, const Vector& phi);

/// Imb(1) - Imb(0) = 4 Lambda' phi_new for the candidate patient.
double imb_delta(const ImbalanceState& state, const Vector& phi_new);

/// Ties: |imb1 - imb0| <= 1e-12 (1 + |imb1| + |imb0|).
bool is_tie(double imb1, double imb0);

/// Scaled Mahalanobis imbalance (k/2) d' Sigma^+ d, d the difference of arm
/// means, for many assignment vectors over one fixed covariate sample. The
/// sample covariance (denominator k-1) is the same for every assignment, so
/// it is factored once.
///
/// For s <= k-1 the s x s covariance is used directly. Otherwise the
/// quadratic form is evaluated on the k x k Gram side, where
///     d' Sigma^+ d = (k-1) c' P c,
/// c the arm-mean contrast weights and P the projector onto the range of the
/// centred Gram matrix. Both routes share the pinv truncation rule because
/// the two matrices have the same non-zero spectrum.
class MahalanobisScorer {
   public:
    MahalanobisScorer(Matrix X_sel, double tol_ratio = numerics::kDefaultPinvTol);

    /// d' Sigma^+ d
    double quadratic(std::span<const int> assignments) const;
    /// (k/2) d' Sigma^+ d
    double imbalance(std::span<const int> assignments) const;

    bool gram_side() const { return gram_side_; }

   private:
    Vector contrast(std::span<const int> assignments) const;

    Matrix X_;
    Eigen::Index k_;
    bool gram_side_ = false;
    std::optional<numerics::PinvQuadraticForm> form_;
    bool full_projector_ = false;  // Gram side: P = I - ee'
    Matrix range_basis_;           // Gram side fallback: retained eigenvectors
};

/// Errors: an empty arm -> ErrorCode::undefined_imbalance. Zero selected
/// columns give 0.
double mahalanobis_imb(const Matrix& X_sel, std::span<const int> assignments,
                       double tol_ratio = numerics::kDefaultPinvTol);

/// mean(Y | T = 1) - mean(Y | T = 0)
double difference_in_means(std::span<const int> assignments, const Vector& y);

struct MetricOptions {
    double pinv_tol = numerics::kDefaultPinvTol;
    numerics::CovDenominator pooled_denominator = numerics::CovDenominator::k_minus_1;
    numerics::CovDenominator arm_denominator = numerics::CovDenominator::k;
};

struct RunMetrics {
    double imb_m = 0.0;    // (n/2) Mahalanobis on the true set
    double dncm = 0.0;     // n^2 ||mean diff||^2
    double dnc = 0.0;      // n^2 ||Sigma(1) - Sigma(0)||_F^2
    double imb_phi = 0.0;  // ||Lambda||^2 with the covariance-family phi
    double tau_hat = 0.0;
    std::vector<double> tpr;  // per batch
    std::vector<double> fpr;
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    double wall_seconds = 0.0;
};

/// All imbalance metrics are evaluated on `true_set`, not on the selected
/// sets. `selection_history` holds one selected set per batch (may be empty
/// for procedures without selection).
RunMetrics report_metrics(const Matrix& X, std::span<const int> assignments,
                          const Vector& outcomes, const SelectedSet& true_set,
                          const PhiSpec& spec,
                          const std::vector<SelectedSet>& selection_history,
                          const MetricOptions& options = {});

double true_positive_rate(const SelectedSet& selected, const SelectedSet& true_set);
double false_positive_rate(const SelectedSet& selected, const SelectedSet& true_set,
                           std::size_t p);

}  // namespace arcs::balance
