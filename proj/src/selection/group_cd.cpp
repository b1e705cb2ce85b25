#include "group_cd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "arcs/error.hpp"

namespace arcs::selection::detail {

GroupCoordinateDescent::GroupCoordinateDescent(Matrix design, Vector response,
                                               std::vector<Group> groups, double tol,
                                               std::size_t max_sweeps)
    : design_(std::move(design)),
      response_(std::move(response)),
      groups_(std::move(groups)),
      tol_(tol),
      max_sweeps_(max_sweeps),
      inv_n_(1.0 / static_cast<double>(std::max<Eigen::Index>(1, design_.rows()))),
      threshold_(tol * (response_.squaredNorm() > 0 ? response_.squaredNorm() * inv_n_ : 1.0)),
      theta_(Vector::Zero(design_.cols())),
      residual_(response_),
      active_(groups_.size(), false) {}

double GroupCoordinateDescent::gradient_norm(std::size_t j) const {
    const auto& g = groups_[j];
    if (g.width == 1)
        return 2.0 * inv_n_ * std::abs(design_.col(g.offset).dot(residual_));
    return 2.0 * inv_n_ *
           (design_.middleCols(g.offset, g.width).transpose() * residual_).norm();
}

std::vector<double> GroupCoordinateDescent::scaled_gradients(const Vector& r) const {
    Vector corr = design_.transpose() * r;
    std::vector<double> out(groups_.size());
    for (std::size_t j = 0; j < groups_.size(); ++j) {
        const auto& g = groups_[j];
        double norm = g.width == 1 ? std::abs(corr(g.offset)) : corr.segment(g.offset, g.width).norm();
        out[j] = 2.0 * inv_n_ * norm / g.weight;
    }
    return out;
}

double GroupCoordinateDescent::lambda_max() const {
    auto grad = scaled_gradients(response_);
    return grad.empty() ? 0.0 : *std::max_element(grad.begin(), grad.end());
}

double GroupCoordinateDescent::update(std::size_t j, double lambda) {
    const auto& g = groups_[j];
    const double threshold = 0.5 * lambda * g.weight;
    if (g.width == 1) {
        auto col = design_.col(g.offset);
        double& beta = theta_(g.offset);
        double z = inv_n_ * col.dot(residual_) + g.gram_scale * beta;
        double shrunk = 0.0;
        if (z > threshold)
            shrunk = (z - threshold) / g.gram_scale;
        else if (z < -threshold)
            shrunk = (z + threshold) / g.gram_scale;
        double delta = shrunk - beta;
        if (delta != 0.0) {
            residual_.noalias() -= delta * col;
            beta = shrunk;
        }
        active_[j] = shrunk != 0.0;
        return g.gram_scale * delta * delta;
    }
    if (g.width > kMaxWidth) return update_wide(j, lambda);
    std::array<double, kMaxWidth> z{};
    double norm2 = 0.0;
    for (Eigen::Index k = 0; k < g.width; ++k) {
        z[k] = inv_n_ * design_.col(g.offset + k).dot(residual_) + g.gram_scale * theta_(g.offset + k);
        norm2 += z[k] * z[k];
    }
    const double norm = std::sqrt(norm2);
    const double factor = norm > threshold ? (1.0 - threshold / norm) / g.gram_scale : 0.0;
    double change = 0.0;
    for (Eigen::Index k = 0; k < g.width; ++k) {
        double& beta = theta_(g.offset + k);
        double delta = factor * z[k] - beta;
        if (delta != 0.0) {
            residual_.noalias() -= delta * design_.col(g.offset + k);
            beta += delta;
            change += delta * delta;
        }
    }
    active_[j] = norm > threshold;
    return g.gram_scale * change;
}

double GroupCoordinateDescent::update_wide(std::size_t j, double lambda) {
    const auto& g = groups_[j];
    const double threshold = 0.5 * lambda * g.weight;
    auto block = design_.middleCols(g.offset, g.width);
    auto beta = theta_.segment(g.offset, g.width);
    Vector z = inv_n_ * (block.transpose() * residual_) + g.gram_scale * beta;
    double norm = z.norm();
    Vector shrunk = Vector::Zero(g.width);
    if (norm > threshold) shrunk = z * ((1.0 - threshold / norm) / g.gram_scale);
    Vector delta = shrunk - beta;
    double change = delta.squaredNorm();
    if (change != 0.0) {
        residual_.noalias() -= block * delta;
        beta = shrunk;
    }
    active_[j] = norm > threshold;
    return g.gram_scale * change;
}

double GroupCoordinateDescent::sweep(const std::vector<std::size_t>& members,
                                     double lambda) {
    double biggest = 0.0;
    for (auto j : members) biggest = std::max(biggest, update(j, lambda));
    return biggest;
}

std::size_t GroupCoordinateDescent::solve(double lambda) {
    const std::size_t m = groups_.size();
    if (lambda_max_ < 0) lambda_max_ = lambda_max();
    if (lambda >= lambda_max_) {
        theta_.setZero();
        residual_ = response_;
        std::fill(active_.begin(), active_.end(), false);
        previous_lambda_ = lambda;
        return 0;
    }
    double reference = previous_lambda_ < 0 ? lambda_max_ : previous_lambda_;
    reference = std::max(reference, lambda);

    // Sequential strong rule: drop groups whose gradient is well below the
    // new penalty; they are re-admitted if the final KKT check fails.
    std::vector<bool> strong(m, false);
    auto grad = scaled_gradients(residual_);
    for (std::size_t j = 0; j < m; ++j) strong[j] = active_[j] || grad[j] >= 2.0 * lambda - reference;

    std::size_t sweeps = 0;
    auto count_sweep = [&] {
        if (++sweeps > max_sweeps_)
            fail(ErrorCode::convergence, "coordinate descent did not converge in " +
                                             std::to_string(max_sweeps_) + " sweeps");
    };

    std::vector<std::size_t> members;
    std::vector<std::size_t> active_members;
    for (;;) {
        members.clear();
        for (std::size_t j = 0; j < m; ++j)
            if (strong[j]) members.push_back(j);

        for (;;) {
            count_sweep();
            if (sweep(members, lambda) <= threshold_) break;
            // Iterate on the current active set until it settles, then go
            // back to a sweep over the whole strong set.
            for (;;) {
                active_members.clear();
                for (auto j : members)
                    if (active_[j]) active_members.push_back(j);
                count_sweep();
                if (sweep(active_members, lambda) <= threshold_) break;
            }
        }

        bool violated = false;
        grad = scaled_gradients(residual_);
        for (std::size_t j = 0; j < m; ++j) {
            if (strong[j]) continue;
            if (grad[j] > lambda) {
                strong[j] = true;
                violated = true;
            }
        }
        if (!violated) break;
    }
    previous_lambda_ = lambda;
    return sweeps;
}

}  // namespace arcs::selection::detail
