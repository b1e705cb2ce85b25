#include "arcs/balance.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "arcs/error.hpp"

namespace arcs::balance {

void PhiSpec::validate() const {
    require(w0 >= 0 && w1 >= 0 && w2 >= 0, ErrorCode::config,
            "phi weights must be non-negative");
    if (kind == PhiKind::mahalanobis_family)
        require(w2 == 0.0, ErrorCode::config, "mahalanobis-family phi has no w2 weight");
    require(std::abs(w0 + w1 + w2 - 1.0) <= 1e-12, ErrorCode::config,
            "phi weights must sum to 1");
}

Vector phi_cov(std::span<const double> x, const PhiSpec& spec) {
    const std::size_t s = x.size();
    Vector out(static_cast<Eigen::Index>(phi_dim(s)));
    const double r1 = std::sqrt(spec.w1);
    const double r2 = std::sqrt(spec.w2);
    out(0) = std::sqrt(spec.w0);
    for (std::size_t a = 0; a < s; ++a) out(static_cast<Eigen::Index>(1 + a)) = r1 * x[a];
    Eigen::Index pos = static_cast<Eigen::Index>(1 + s);
    for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b < s; ++b) out(pos++) = r2 * x[a] * x[b];
    return out;
}

Vector restrict_row(const Matrix& X, Eigen::Index row, const SelectedSet& selected) {
    Vector out(static_cast<Eigen::Index>(selected.size()));
    for (std::size_t k = 0; k < selected.size(); ++k)
        out(static_cast<Eigen::Index>(k)) = X(row, static_cast<Eigen::Index>(selected[k]));
    return out;
}

Matrix restrict(const Matrix& X, Eigen::Index rows, const SelectedSet& selected) {
    Matrix out(rows, static_cast<Eigen::Index>(selected.size()));
    for (std::size_t k = 0; k < selected.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) =
            X.col(static_cast<Eigen::Index>(selected[k])).head(rows);
    return out;
}

ImbalanceState::ImbalanceState(PhiSpec spec, SelectedSet selected)
    : spec_(spec),
      selected_(std::move(selected)),
      lambda_(Vector::Zero(static_cast<Eigen::Index>(phi_dim(selected_.size())))) {}

Vector ImbalanceState::phi_of(const Matrix& X, Eigen::Index row) const {
    Vector x = restrict_row(X, row, selected_);
    return phi_cov(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), spec_);
}

void ImbalanceState::add(int arm, const Vector& phi) {
    require(phi.size() == lambda_.size(), ErrorCode::contract,
            "imbalance update: phi dimension " + std::to_string(phi.size()) +
                " does not match state dimension " + std::to_string(lambda_.size()));
    require(arm == 0 || arm == 1, ErrorCode::contract, "imbalance update: arm must be 0 or 1");
    if (arm == 1)
        lambda_ += phi;
    else
        lambda_ -= phi;
}

void ImbalanceState::rebuild(const Matrix& X, std::span<const int> assignments,
                             std::size_t count, SelectedSet selected) {
    selected_ = std::move(selected);
    lambda_ = Vector::Zero(static_cast<Eigen::Index>(phi_dim(selected_.size())));
    for (std::size_t i = 0; i < count; ++i)
        add(assignments[i], phi_of(X, static_cast<Eigen::Index>(i)));
}

ImbalanceState update_lambda(ImbalanceState state, int arm, const Vector& phi) {
    state.add(arm, phi);
    return state;
}

double imb_delta(const ImbalanceState& state, const Vector& phi_new) {
    require(phi_new.size() == state.lambda_vec().size(), ErrorCode::contract,
            "imb_delta: phi dimension does not match state");
    return 4.0 * state.lambda_vec().dot(phi_new);
}

bool is_tie(double imb1, double imb0) {
    return std::abs(imb1 - imb0) <= 1e-12 * (1.0 + std::abs(imb1) + std::abs(imb0));
}

//---------------------------------------------------------------------------//
// Mahalanobis
//---------------------------------------------------------------------------//

MahalanobisScorer::MahalanobisScorer(Matrix X_sel, double tol_ratio)
    : X_(std::move(X_sel)), k_(X_.rows()) {
    const auto s = X_.cols();
    if (s == 0) return;
    require(k_ >= 2, ErrorCode::undefined_imbalance,
            "mahalanobis imbalance needs at least two patients");
    if (s <= k_ - 1) {
        form_.emplace(numerics::sample_cov(X_, numerics::CovDenominator::k_minus_1), tol_ratio);
        return;
    }
    gram_side_ = true;
    Matrix centered = X_.rowwise() - X_.colwise().mean();
    Matrix gram = Matrix::Zero(k_, k_);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / static_cast<double>(k_ - 1));
    gram = gram.selfadjointView<Eigen::Lower>();
    // The all-ones direction is always in the null space of the centred
    // Gram matrix. Lift it to trace/k; if the lifted matrix is certified
    // definite, the range of the Gram matrix is exactly the complement of
    // the ones vector.
    const double lift = gram.trace() / static_cast<double>(k_);
    Matrix lifted = gram.array() + lift / static_cast<double>(k_);
    if (lift > 0 && numerics::certified_cholesky(lifted, tol_ratio)) {
        full_projector_ = true;
        return;
    }
    auto spec = numerics::symmetric_eigen(gram);
    const double cutoff = tol_ratio * spec.eigenvalues.cwiseAbs().maxCoeff();
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < k_; ++i)
        if (spec.eigenvalues(i) > cutoff) ++kept;
    range_basis_ = spec.eigenvectors.leftCols(kept);
}

Vector MahalanobisScorer::contrast(std::span<const int> assignments) const {
    require(static_cast<Eigen::Index>(assignments.size()) == k_, ErrorCode::contract,
            "mahalanobis imbalance: assignment length does not match sample");
    std::size_t n1 = 0;
    for (int t : assignments) {
        require(t == 0 || t == 1, ErrorCode::contract,
                "mahalanobis imbalance: assignments must be 0 or 1");
        n1 += static_cast<std::size_t>(t);
    }
    const std::size_t n0 = assignments.size() - n1;
    require(n1 > 0 && n0 > 0, ErrorCode::undefined_imbalance,
            "mahalanobis imbalance undefined with an empty arm");
    Vector c(k_);
    const double a1 = 1.0 / static_cast<double>(n1);
    const double a0 = -1.0 / static_cast<double>(n0);
    for (Eigen::Index i = 0; i < k_; ++i) c(i) = assignments[static_cast<std::size_t>(i)] ? a1 : a0;
    return c;
}

double MahalanobisScorer::quadratic(std::span<const int> assignments) const {
    Vector c = contrast(assignments);
    if (X_.cols() == 0) return 0.0;
    if (!gram_side_) {
        Vector d = X_.transpose() * c;
        return (*form_)(d);
    }
    const double den = static_cast<double>(k_ - 1);
    if (full_projector_) {
        double along_ones = c.sum();
        return den * (c.squaredNorm() - along_ones * along_ones / static_cast<double>(k_));
    }
    return den * (range_basis_.transpose() * c).squaredNorm();
}

double MahalanobisScorer::imbalance(std::span<const int> assignments) const {
    return 0.5 * static_cast<double>(k_) * quadratic(assignments);
}

double mahalanobis_imb(const Matrix& X_sel, std::span<const int> assignments,
                       double tol_ratio) {
    return MahalanobisScorer(X_sel, tol_ratio).imbalance(assignments);
}

//---------------------------------------------------------------------------//
// Reporting
//---------------------------------------------------------------------------//

double difference_in_means(std::span<const int> assignments, const Vector& y) {
    require(static_cast<Eigen::Index>(assignments.size()) == y.size(), ErrorCode::contract,
            "difference in means: length mismatch");
    double s1 = 0, s0 = 0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == 1) {
            s1 += y(static_cast<Eigen::Index>(i));
            ++n1;
        } else {
            s0 += y(static_cast<Eigen::Index>(i));
            ++n0;
        }
    }
    require(n1 > 0 && n0 > 0, ErrorCode::undefined_imbalance,
            "difference in means undefined with an empty arm");
    return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

double true_positive_rate(const SelectedSet& selected, const SelectedSet& true_set) {
    if (true_set.empty()) return 1.0;
    return static_cast<double>(intersect_supports(selected, true_set).size()) /
           static_cast<double>(true_set.size());
}

double false_positive_rate(const SelectedSet& selected, const SelectedSet& true_set,
                           std::size_t p) {
    if (p <= true_set.size()) return 0.0;
    return static_cast<double>(set_difference(selected, true_set).size()) /
           static_cast<double>(p - true_set.size());
}

RunMetrics report_metrics(const Matrix& X, std::span<const int> assignments,
                          const Vector& outcomes, const SelectedSet& true_set,
                          const PhiSpec& spec,
                          const std::vector<SelectedSet>& selection_history,
                          const MetricOptions& options) {
    const auto n = X.rows();
    require(static_cast<Eigen::Index>(assignments.size()) == n, ErrorCode::contract,
            "report_metrics: assignment length mismatch");
    true_set.check_range(static_cast<std::size_t>(X.cols()));

    RunMetrics m;
    std::vector<Eigen::Index> rows1, rows0;
    for (Eigen::Index i = 0; i < n; ++i)
        (assignments[static_cast<std::size_t>(i)] == 1 ? rows1 : rows0).push_back(i);
    m.n1 = rows1.size();
    m.n0 = rows0.size();
    require(m.n1 > 0 && m.n0 > 0, ErrorCode::undefined_imbalance,
            "report_metrics: an arm is empty");

    Matrix XJ = restrict(X, n, true_set);
    const double nn = static_cast<double>(n);

    auto arm_rows = [&](const std::vector<Eigen::Index>& rows) {
        Matrix out(static_cast<Eigen::Index>(rows.size()), XJ.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = XJ.row(rows[i]);
        return out;
    };
    Matrix X1 = arm_rows(rows1);
    Matrix X0 = arm_rows(rows0);
    Vector diff = X1.colwise().mean().transpose() - X0.colwise().mean().transpose();
    if (XJ.cols() == 0) diff = Vector(0);

    m.dncm = nn * nn * diff.squaredNorm();
    if (XJ.cols() > 0) {
        Matrix pooled = numerics::sample_cov(XJ, options.pooled_denominator);
        numerics::PinvQuadraticForm form(pooled, options.pinv_tol);
        m.imb_m = 0.5 * nn * form(diff);

        auto arm_cov = [&](const Matrix& Xa) -> Matrix {
            if (options.arm_denominator == numerics::CovDenominator::k_minus_1 && Xa.rows() < 2)
                return Matrix::Zero(XJ.cols(), XJ.cols());
            return numerics::sample_cov(Xa, options.arm_denominator);
        };
        m.dnc = nn * nn * (arm_cov(X1) - arm_cov(X0)).squaredNorm();
    }

    PhiSpec cov_spec = spec.kind == PhiKind::cov_family ? spec : PhiSpec{};
    ImbalanceState imb(cov_spec, true_set);
    imb.rebuild(X, assignments, static_cast<std::size_t>(n), true_set);
    m.imb_phi = imb.imbalance();

    m.tau_hat = difference_in_means(assignments, outcomes);

    for (const auto& selected : selection_history) {
        m.tpr.push_back(true_positive_rate(selected, true_set));
        m.fpr.push_back(false_positive_rate(selected, true_set, static_cast<std::size_t>(X.cols())));
    }
    return m;
}

}  // namespace arcs::balance
