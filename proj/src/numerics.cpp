#include "arcs/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "arcs/error.hpp"

namespace arcs::numerics {

Matrix sample_cov(const Matrix& X, CovDenominator denominator) {
    const auto k = X.rows();
    require(k >= 1, ErrorCode::empty_input, "sample_cov: no observations");
    if (denominator == CovDenominator::k_minus_1) {
        require(k >= 2, ErrorCode::degenerate_input,
                "sample_cov: denominator k-1 needs at least two observations");
    }
    const double den = denominator == CovDenominator::k ? static_cast<double>(k)
                                                        : static_cast<double>(k - 1);
    Matrix centered = X.rowwise() - X.colwise().mean();
    Matrix lower = Matrix::Zero(X.cols(), X.cols());
    lower.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / den);
    Matrix cov = lower.selfadjointView<Eigen::Lower>();
    return cov;
}

bool is_symmetric(const Matrix& A, double rel_tol) {
    if (A.rows() != A.cols()) return false;
    if (A.size() == 0) return true;
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    return (A - A.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

SpectralDecomposition symmetric_eigen(const Matrix& A) {
    require(is_symmetric(A), ErrorCode::contract,
            "symmetric_eigen: input is not symmetric");
    const auto n = A.rows();
    SpectralDecomposition out;
    if (n == 0) {
        out.eigenvalues = Vector(0);
        out.eigenvectors = Matrix(0, 0);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
    require(solver.info() == Eigen::Success, ErrorCode::decomposition,
            "symmetric_eigen: eigensolver did not converge");
    // Eigen returns ascending order.
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

namespace {

// Columns V_r * D_r^{-1/2} for the eigenvalues kept by the truncation rule.
Matrix retained_scaled_eigenvectors(const Matrix& A, double tol_ratio) {
    auto spec = symmetric_eigen(A);
    const auto n = A.rows();
    double top = n > 0 ? spec.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    double cutoff = tol_ratio * top;
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(spec.eigenvalues(i)) > cutoff && spec.eigenvalues(i) > 0) ++kept;
    Matrix W(n, kept);
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double lam = spec.eigenvalues(i);
        if (std::abs(lam) > cutoff && lam > 0)
            W.col(col++) = spec.eigenvectors.col(i) / std::sqrt(lam);
    }
    return W;
}

}  // namespace

Matrix pinv(const Matrix& A, double tol_ratio) {
    require(is_symmetric(A), ErrorCode::contract, "pinv: input is not symmetric");
    const auto n = A.rows();
    if (n == 0) return Matrix(0, 0);
    auto spec = symmetric_eigen(A);
    double top = spec.eigenvalues.cwiseAbs().maxCoeff();
    double cutoff = tol_ratio * top;
    Vector inv = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double lam = spec.eigenvalues(i);
        if (std::abs(lam) > cutoff) inv(i) = 1.0 / lam;
    }
    Matrix out = spec.eigenvectors * inv.asDiagonal() * spec.eigenvectors.transpose();
    // Symmetrize away rounding so callers get an exactly symmetric result.
    return 0.5 * (out + out.transpose());
}

Matrix chol_lower(const Matrix& A) {
    require(is_symmetric(A), ErrorCode::contract, "chol_lower: input is not symmetric");
    Eigen::LLT<Matrix> llt(A);
    require(llt.info() == Eigen::Success, ErrorCode::decomposition,
            "chol_lower: matrix is not positive definite");
    Matrix L = llt.matrixL();
    require(L.allFinite(), ErrorCode::decomposition,
            "chol_lower: non-finite factor");
    return L;
}

std::optional<Matrix> certified_cholesky(const Matrix& A, double tol_ratio) {
    const auto n = A.rows();
    double trace = A.trace();
    if (n == 0 || !(trace > 0)) return std::nullopt;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Matrix L = llt.matrixL();
    Matrix Linv = Matrix::Identity(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(Linv);
    double trace_inv = Linv.squaredNorm();
    if (std::isfinite(trace_inv) && trace_inv > 0 && 1.0 / trace_inv > tol_ratio * trace)
        return L;
    return std::nullopt;
}

PinvQuadraticForm::PinvQuadraticForm(const Matrix& A, double tol_ratio) {
    require(A.rows() == A.cols(), ErrorCode::contract,
            "PinvQuadraticForm: matrix is not square");
    const auto n = A.rows();
    if (n == 0) {
        factor_ = Matrix(0, 0);
        cholesky_ = true;
        return;
    }
    if (auto L = certified_cholesky(A, tol_ratio)) {
        factor_ = std::move(*L);
        cholesky_ = true;
        return;
    }
    factor_ = retained_scaled_eigenvectors(A, tol_ratio);
    cholesky_ = false;
}

double PinvQuadraticForm::operator()(const Vector& v) const {
    require(v.size() == factor_.rows(), ErrorCode::contract,
            "PinvQuadraticForm: dimension mismatch");
    if (v.size() == 0) return 0.0;
    if (cholesky_) {
        Vector z = factor_.triangularView<Eigen::Lower>().solve(v);
        return z.squaredNorm();
    }
    return (factor_.transpose() * v).squaredNorm();
}

}  // namespace arcs::numerics
