#include <cmath>
#include <string>

#include "arcs/error.hpp"
#include "arcs/selection.hpp"
#include "group_cd.hpp"
#include "lasso_internal.hpp"

namespace arcs::selection {

namespace {

// Columns whose spread is below this (relative to their magnitude) are
// treated as constant.
constexpr double kConstantColumnTol = 1e-12;

}  // namespace

StandardizedDesign StandardizedDesign::fit(const Matrix& X, bool standardize) {
    StandardizedDesign d;
    const auto n = X.rows();
    const auto p = X.cols();
    d.center = X.colwise().mean().transpose();
    d.scale = Vector::Ones(p);
    d.usable.assign(static_cast<std::size_t>(p), true);
    d.x = X.rowwise() - d.center.transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
        double sd = std::sqrt(d.x.col(j).squaredNorm() / static_cast<double>(n));
        double magnitude = std::max(1.0, std::abs(d.center(j)));
        if (!(sd > kConstantColumnTol * magnitude)) {
            d.usable[j] = false;
            d.x.col(j).setZero();
            continue;
        }
        if (standardize) {
            d.scale(j) = sd;
            d.x.col(j) /= sd;
        }
    }
    return d;
}

Matrix StandardizedDesign::apply(const Matrix& X) const {
    Matrix out = X.rowwise() - center.transpose();
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        if (!usable[j])
            out.col(j).setZero();
        else
            out.col(j) /= scale(j);
    }
    return out;
}

namespace detail {

GroupCoordinateDescent make_lasso_solver(const StandardizedDesign& design,
                                         const Vector& centered_y,
                                         const LassoOptions& options) {
    const auto n = static_cast<double>(design.x.rows());
    std::vector<Group> groups;
    Matrix columns(design.x.rows(), 0);
    std::vector<Eigen::Index> usable;
    for (Eigen::Index j = 0; j < design.x.cols(); ++j)
        if (design.usable[j]) usable.push_back(j);
    columns.resize(design.x.rows(), static_cast<Eigen::Index>(usable.size()));
    for (std::size_t k = 0; k < usable.size(); ++k) {
        auto j = usable[k];
        columns.col(static_cast<Eigen::Index>(k)) = design.x.col(j);
        groups.push_back({static_cast<Eigen::Index>(k), 1, 1.0,
                          design.x.col(j).squaredNorm() / n});
    }
    return GroupCoordinateDescent(std::move(columns), centered_y, std::move(groups),
                                  options.tol, options.max_sweeps);
}

Vector expand_lasso_theta(const StandardizedDesign& design, const Vector& theta) {
    Vector full = Vector::Zero(design.x.cols());
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < design.x.cols(); ++j)
        if (design.usable[j]) full(j) = theta(k++);
    return full;
}

}  // namespace detail

double lasso_lambda_max(const Matrix& X, const Vector& y, bool standardize) {
    require(X.rows() == y.size(), ErrorCode::contract, "lasso: X and y row mismatch");
    auto design = StandardizedDesign::fit(X, standardize);
    Vector yc = y.array() - y.mean();
    LassoOptions options;
    options.standardize = standardize;
    return detail::make_lasso_solver(design, yc, options).lambda_max();
}

LassoFit lasso_fit(const Matrix& X, const Vector& y, double lambda,
                   const LassoOptions& options) {
    require(X.rows() == y.size(), ErrorCode::contract, "lasso: X and y row mismatch");
    require(X.rows() >= 2, ErrorCode::contract, "lasso: needs at least two observations");
    require(lambda >= 0 && std::isfinite(lambda), ErrorCode::contract,
            "lasso: lambda must be finite and non-negative");
    require(X.allFinite() && y.allFinite(), ErrorCode::contract,
            "lasso: non-finite input");

    auto design = StandardizedDesign::fit(X, options.standardize);
    const double ybar = y.mean();
    Vector yc = y.array() - ybar;
    auto solver = detail::make_lasso_solver(design, yc, options);

    LassoFit fit;
    fit.lambda = lambda;
    fit.iterations = solver.solve(lambda);
    Vector theta = detail::expand_lasso_theta(design, solver.theta());
    fit.coefficients = theta.cwiseQuotient(design.scale);
    fit.intercept = ybar - fit.coefficients.dot(design.center);
    return fit;
}

double lasso_objective(const Matrix& X, const Vector& y, const LassoFit& fit,
                       bool standardize) {
    auto design = StandardizedDesign::fit(X, standardize);
    Vector theta = fit.coefficients.cwiseProduct(design.scale);
    Vector yc = y.array() - y.mean();
    Vector r = yc - design.x * theta;
    return r.squaredNorm() / static_cast<double>(X.rows()) + fit.lambda * theta.lpNorm<1>();
}

SelectedSet support(const LassoFit& fit, double zero_tol) {
    std::vector<std::size_t> idx;
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j)
        if (std::abs(fit.coefficients(j)) > zero_tol) idx.push_back(static_cast<std::size_t>(j));
    return SelectedSet(std::move(idx));
}

}  // namespace arcs::selection
