#pragma once

#include <cstddef>
#include <vector>

#include "arcs/numerics.hpp"

namespace arcs::selection::detail {

/// One penalized block of columns in a centred design. The block's Gram
/// matrix B'B/n must equal `gram_scale` * I.
struct Group {
    Eigen::Index offset = 0;
    Eigen::Index width = 0;
    double weight = 1.0;      // penalty multiplier, sqrt(width) for group lasso
    double gram_scale = 1.0;
};

/// Block coordinate descent for
///     (1/n)||y - B theta||^2 + lambda sum_j weight_j ||theta_j||
/// on centred y and B. A solve stops when a sweep changes no block by more
/// than gram_scale * ||dtheta_j||^2 > tol * ||y||^2 / n. Each block update is exact (group soft-thresholding)
/// because blocks are scaled-orthonormal. Solves warm-start from the
/// previous solution and use the sequential strong rule with a full KKT
/// re-check, so the returned solution satisfies the optimality conditions
/// for every group.
class GroupCoordinateDescent {
   public:
    GroupCoordinateDescent(Matrix design, Vector response, std::vector<Group> groups,
                           double tol, std::size_t max_sweeps);

    /// Returns the number of sweeps used; throws ErrorCode::convergence when
    /// max_sweeps is exceeded.
    std::size_t solve(double lambda);

    double lambda_max() const;
    const Vector& theta() const { return theta_; }
    const Vector& residual() const { return residual_; }
    const Matrix& design() const { return design_; }
    const std::vector<Group>& groups() const { return groups_; }

    /// (2/n) ||B_j' r||
    double gradient_norm(std::size_t j) const;

   private:
    /// (2/n) ||B_j' r|| / weight_j for every group.
    std::vector<double> scaled_gradients(const Vector& r) const;
    static constexpr Eigen::Index kMaxWidth = 8;
    double update(std::size_t j, double lambda);
    double update_wide(std::size_t j, double lambda);
    double sweep(const std::vector<std::size_t>& members, double lambda);

    Matrix design_;
    Vector response_;
    std::vector<Group> groups_;
    double tol_;
    std::size_t max_sweeps_;
    double inv_n_;
    double threshold_;  // tol scaled by the response variance

    Vector theta_;
    Vector residual_;
    std::vector<bool> active_;
    double previous_lambda_ = -1.0;
    double lambda_max_ = -1.0;  // cached on first solve
};

}  // namespace arcs::selection::detail
