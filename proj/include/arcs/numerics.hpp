#pragma once

#include <Eigen/Core>
#include <optional>

namespace arcs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numerics {

inline constexpr double kDefaultPinvTol = 1e-10;

enum class CovDenominator { k, k_minus_1 };

/// Column-centred cross-products of the k observation rows of X, divided by
/// k or k-1. The result is exactly symmetric.
Matrix sample_cov(const Matrix& X, CovDenominator denominator);

struct SpectralDecomposition {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // orthonormal columns, matching eigenvalues
};

SpectralDecomposition symmetric_eigen(const Matrix& A);

/// Moore-Penrose inverse of a symmetric matrix. Eigenvalues with
/// |lambda| <= tol_ratio * max|lambda| are treated as zero.
Matrix pinv(const Matrix& A, double tol_ratio = kDefaultPinvTol);

/// Lower Cholesky factor; throws ErrorCode::decomposition if A is not
/// positive definite.
Matrix chol_lower(const Matrix& A);

bool is_symmetric(const Matrix& A, double rel_tol = 1e-10);

/// Returns the lower Cholesky factor of A only when it proves that every
/// eigenvalue exceeds tol_ratio * lambda_max, using
/// lambda_min >= 1/trace(A^-1) and lambda_max <= trace(A).
std::optional<Matrix> certified_cholesky(const Matrix& A, double tol_ratio);

/// Evaluates v' A^+ v for many vectors v against one symmetric PSD matrix A,
/// with the same truncation rule as pinv().
///
/// When a Cholesky factor exists and certifies
///     1 / trace(A^-1) > tol_ratio * trace(A)
/// every eigenvalue is known to exceed the truncation threshold, so A^+ = A^-1
/// and triangular solves are used. Otherwise the form is evaluated from the
/// retained eigenpairs.
class PinvQuadraticForm {
   public:
    PinvQuadraticForm(const Matrix& A, double tol_ratio = kDefaultPinvTol);

    double operator()(const Vector& v) const;

    /// True when the Cholesky path is in use.
    bool certified() const { return cholesky_; }
    Eigen::Index dim() const { return factor_.rows(); }

   private:
    Matrix factor_;  // lower Cholesky L, or V_r * D_r^{-1/2}
    bool cholesky_ = false;
};

}  // namespace numerics
}  // namespace arcs
