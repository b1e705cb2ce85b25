#include <Eigen/Eigenvalues>
#include <cmath>

#include "arcs/error.hpp"
#include "arcs/selection.hpp"
#include "lasso_internal.hpp"

namespace arcs::selection {

Vector basis_expand(double x, int degree, double center) {
    require(degree >= 1, ErrorCode::contract, "basis_expand: degree must be positive");
    Vector out(degree);
    double u = x - center;
    double power = 1.0;
    for (int k = 0; k < degree; ++k) {
        power *= u;
        out(k) = power;
    }
    return out;
}

Matrix AdditiveDesign::raw_block(const Matrix& X, std::size_t j) const {
    const int d = basis_.degree;
    Matrix raw(X.rows(), d);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double u = X(i, static_cast<Eigen::Index>(j)) - basis_.centers(static_cast<Eigen::Index>(j));
        double power = 1.0;
        for (int k = 0; k < d; ++k) {
            power *= u;
            raw(i, k) = power;
        }
    }
    return raw;
}

AdditiveDesign AdditiveDesign::fit(const Matrix& X, int degree) {
    require(degree >= 1, ErrorCode::contract, "additive design: degree must be positive");
    AdditiveDesign d;
    const auto n = X.rows();
    const auto p = X.cols();
    d.basis_.degree = degree;
    d.basis_.centers = X.colwise().mean().transpose();

    std::vector<Matrix> blocks;
    Eigen::Index total = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        Matrix raw = d.raw_block(X, static_cast<std::size_t>(j));
        Vector means = raw.colwise().mean().transpose();
        raw.rowwise() -= means.transpose();
        Matrix gram = raw.transpose() * raw / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        const Vector& values = eig.eigenvalues();
        double top = values.size() ? values.maxCoeff() : 0.0;
        std::vector<Eigen::Index> keep;
        // Descending order keeps the leading directions first.
        for (Eigen::Index k = values.size() - 1; k >= 0; --k)
            if (top > 0 && values(k) > 1e-10 * top) keep.push_back(k);
        Matrix transform(degree, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c)
            transform.col(static_cast<Eigen::Index>(c)) =
                eig.eigenvectors().col(keep[c]) / std::sqrt(values(keep[c]));
        d.offsets_.push_back(total);
        d.widths_.push_back(transform.cols());
        total += transform.cols();
        d.raw_means_.push_back(std::move(means));
        blocks.push_back(raw * transform);
        d.transforms_.push_back(std::move(transform));
    }
    d.blocks_.resize(n, total);
    for (Eigen::Index j = 0; j < p; ++j)
        d.blocks_.middleCols(d.offsets_[j], d.widths_[j]) = blocks[static_cast<std::size_t>(j)];
    return d;
}

Matrix AdditiveDesign::apply(const Matrix& X) const {
    require(static_cast<std::size_t>(X.cols()) == groups(), ErrorCode::contract,
            "additive design: column mismatch");
    Matrix out(X.rows(), blocks_.cols());
    for (std::size_t j = 0; j < groups(); ++j) {
        if (widths_[j] == 0) continue;
        Matrix raw = raw_block(X, j);
        raw.rowwise() -= raw_means_[j].transpose();
        out.middleCols(offsets_[j], widths_[j]) = raw * transforms_[j];
    }
    return out;
}

Vector AdditiveDesign::raw_coefficients(std::size_t j, const Vector& theta) const {
    if (widths_[j] == 0) return Vector::Zero(basis_.degree);
    return transforms_[j] * theta;
}

double AdditiveFit::predict(std::span<const double> x) const {
    double out = intercept;
    for (std::size_t j = 0; j < group_coefficients.size(); ++j) {
        if (group_coefficients[j].isZero(0.0)) continue;
        out += basis_expand(x[j], basis.degree, basis.centers(static_cast<Eigen::Index>(j)))
                   .dot(group_coefficients[j]);
    }
    return out;
}

namespace detail {

GroupCoordinateDescent make_additive_solver(const AdditiveDesign& design,
                                            const Vector& centered_y,
                                            const AdditiveOptions& options) {
    std::vector<Group> groups;
    for (std::size_t j = 0; j < design.groups(); ++j) {
        auto w = design.width(j);
        if (w == 0) continue;
        groups.push_back({design.offset(j), w, std::sqrt(static_cast<double>(w)), 1.0});
    }
    return GroupCoordinateDescent(design.blocks(), centered_y, std::move(groups),
                                  options.tol, options.max_sweeps);
}

}  // namespace detail

double additive_lambda_max(const Matrix& X, const Vector& y, int degree) {
    require(X.rows() == y.size(), ErrorCode::contract, "additive: X and y row mismatch");
    auto design = AdditiveDesign::fit(X, degree);
    Vector yc = y.array() - y.mean();
    AdditiveOptions options;
    options.degree = degree;
    return detail::make_additive_solver(design, yc, options).lambda_max();
}

AdditiveFit additive_fit(const Matrix& X, const Vector& y, double lambda,
                         const AdditiveOptions& options) {
    require(X.rows() == y.size(), ErrorCode::contract, "additive: X and y row mismatch");
    require(X.rows() >= options.degree + 2, ErrorCode::contract,
            "additive: needs at least degree + 2 observations");
    require(lambda >= 0 && std::isfinite(lambda), ErrorCode::contract,
            "additive: lambda must be finite and non-negative");
    require(X.allFinite() && y.allFinite(), ErrorCode::contract,
            "additive: non-finite input");

    auto design = AdditiveDesign::fit(X, options.degree);
    const double ybar = y.mean();
    Vector yc = y.array() - ybar;
    auto solver = detail::make_additive_solver(design, yc, options);

    AdditiveFit fit;
    fit.lambda = lambda;
    fit.basis = design.basis();
    fit.iterations = solver.solve(lambda);
    fit.intercept = ybar;
    const Vector& theta = solver.theta();
    for (std::size_t j = 0; j < design.groups(); ++j) {
        Vector block = theta.segment(design.offset(j), design.width(j));
        Vector raw = design.raw_coefficients(j, block);
        fit.intercept -= design.raw_means(j).dot(raw);
        fit.group_coefficients.push_back(std::move(raw));
    }
    return fit;
}

SelectedSet additive_support(const AdditiveFit& fit, double zero_tol) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < fit.group_coefficients.size(); ++j)
        if (fit.block_norm(j) > zero_tol) idx.push_back(j);
    return SelectedSet(std::move(idx));
}

}  // namespace arcs::selection
