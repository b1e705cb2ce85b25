#include <cmath>
#include <numeric>

#include "arcs/error.hpp"
#include "arcs/selection.hpp"
#include "lasso_internal.hpp"

namespace arcs::selection {

std::vector<double> lambda_grid(double lambda_max, std::size_t grid_size, double min_ratio) {
    require(grid_size >= 1, ErrorCode::contract, "lambda grid: grid_size must be positive");
    require(min_ratio > 0 && min_ratio <= 1, ErrorCode::contract,
            "lambda grid: min_ratio must lie in (0, 1]");
    std::vector<double> grid(grid_size);
    if (grid_size == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double step = std::log(min_ratio) / static_cast<double>(grid_size - 1);
    for (std::size_t k = 0; k < grid_size; ++k)
        grid[k] = lambda_max * std::exp(step * static_cast<double>(k));
    grid.back() = lambda_max * min_ratio;
    return grid;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, Rng& rng) {
    require(folds >= 1, ErrorCode::contract, "fold assignment: folds must be positive");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm.begin(), perm.end());
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % folds;
    return fold;
}

std::size_t choose_lambda_index(const std::vector<double>& cv_mean,
                                const std::vector<double>& cv_se, CvRule rule) {
    require(!cv_mean.empty(), ErrorCode::contract, "choose_lambda_index: empty curve");
    std::size_t best = 0;
    for (std::size_t k = 1; k < cv_mean.size(); ++k)
        if (cv_mean[k] < cv_mean[best]) best = k;
    if (rule == CvRule::lambda_min) return best;
    // Largest penalty (earliest grid point) within one standard error.
    const double bound = cv_mean[best] + cv_se[best];
    for (std::size_t k = 0; k <= best; ++k)
        if (cv_mean[k] <= bound) return k;
    return best;
}

namespace {

Matrix take_rows(const Matrix& X, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Vector take(const Vector& y, const std::vector<Eigen::Index>& rows) {
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    return out;
}

// Solves along the grid, writing predictions column by column, and
// truncates the path as configured.
template <class Solver, class Predict>
Matrix run_path(Solver& solver, const Vector& yc, const std::vector<double>& grid,
                Eigen::Index rows, const CvOptions& options, Predict&& predict) {
    Matrix pred(rows, static_cast<Eigen::Index>(grid.size()));
    const double null_dev = yc.squaredNorm();
    double r2_prev = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        solver.solve(grid[k]);
        pred.col(static_cast<Eigen::Index>(k)) = predict();
        if (!options.early_stop || !(null_dev > 0)) continue;
        const double r2 = 1.0 - solver.residual().squaredNorm() / null_dev;
        const bool saturated = r2 > options.max_r2;
        const bool flat = k > 0 && r2 - r2_prev < options.min_r2_gain * r2;
        r2_prev = r2;
        if (k + 1 >= options.min_path && (saturated || flat)) {
            for (std::size_t rest = k + 1; rest < grid.size(); ++rest)
                pred.col(static_cast<Eigen::Index>(rest)) = pred.col(static_cast<Eigen::Index>(k));
            break;
        }
    }
    return pred;
}

/// Shared K-fold driver. `fold_path(Xtrain, ytrain, Xtest, grid)` returns a
/// (test rows x grid) matrix of predictions along the regularization path.
template <class FoldPath>
CvResult cross_validate(const Matrix& X, const Vector& y, const CvOptions& options,
                        Rng& rng, double lambda_max, FoldPath&& fold_path) {
    const auto n = static_cast<std::size_t>(X.rows());
    require(n >= 3, ErrorCode::contract, "cross-validation needs at least three observations");
    require(X.rows() == y.size(), ErrorCode::contract, "cross-validation: X/y mismatch");

    CvResult result;
    result.folds_used = options.folds;
    if (n < options.folds) {
        result.folds_used = std::max<std::size_t>(2, n);
        result.folds_reduced = true;
    }
    // The shuffle is always drawn so the stream position does not depend on
    // the data.
    auto fold = fold_assignment(n, result.folds_used, rng);
    result.grid = lambda_grid(lambda_max, options.grid_size, options.min_ratio);
    const std::size_t G = result.grid.size();
    result.cv_mean.assign(G, 0.0);
    result.cv_se.assign(G, 0.0);

    if (G == 1 || !(lambda_max > 0)) {
        result.lambda = lambda_max;
        return result;
    }

    const std::size_t F = result.folds_used;
    Matrix fold_mse = Matrix::Zero(static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(G));
    for (std::size_t f = 0; f < F; ++f) {
        std::vector<Eigen::Index> train, test;
        for (std::size_t i = 0; i < n; ++i)
            (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
        if (test.empty()) continue;
        Matrix Xtr = take_rows(X, train);
        Vector ytr = take(y, train);
        Matrix Xte = take_rows(X, test);
        Vector yte = take(y, test);
        Matrix pred = fold_path(Xtr, ytr, Xte, result.grid);
        for (std::size_t k = 0; k < G; ++k) {
            double sse = (pred.col(static_cast<Eigen::Index>(k)) - yte).squaredNorm();
            result.cv_mean[k] += sse;
            fold_mse(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) =
                sse / static_cast<double>(test.size());
        }
    }
    for (std::size_t k = 0; k < G; ++k) {
        result.cv_mean[k] /= static_cast<double>(n);
        auto col = fold_mse.col(static_cast<Eigen::Index>(k));
        double mean = col.mean();
        double var = F > 1 ? (col.array() - mean).square().sum() / static_cast<double>(F - 1) : 0.0;
        result.cv_se[k] = std::sqrt(var / static_cast<double>(F));
    }
    result.lambda = result.grid[choose_lambda_index(result.cv_mean, result.cv_se, options.rule)];
    return result;
}

}  // namespace

CvResult cv_lambda(const Matrix& X, const Vector& y, const CvOptions& options, Rng& rng,
                   const LassoOptions& lasso) {
    double lambda_max = lasso_lambda_max(X, y, lasso.standardize);
    return cross_validate(
        X, y, options, rng, lambda_max,
        [&](const Matrix& Xtr, const Vector& ytr, const Matrix& Xte,
            const std::vector<double>& grid) {
            auto design = StandardizedDesign::fit(Xtr, lasso.standardize);
            const double ybar = ytr.mean();
            Vector yc = ytr.array() - ybar;
            LassoOptions path_opts = lasso;
            path_opts.tol = lasso.cv_tol;
            auto solver = detail::make_lasso_solver(design, yc, path_opts);
            Matrix Zte = design.apply(Xte);
            return run_path(solver, yc, grid, Xte.rows(), options, [&]() -> Vector {
                Vector theta = detail::expand_lasso_theta(design, solver.theta());
                return (Zte * theta).array() + ybar;
            });
        });
}

CvResult cv_lambda_additive(const Matrix& X, const Vector& y, const CvOptions& options,
                            Rng& rng, const AdditiveOptions& additive) {
    double lambda_max = additive_lambda_max(X, y, additive.degree);
    return cross_validate(
        X, y, options, rng, lambda_max,
        [&](const Matrix& Xtr, const Vector& ytr, const Matrix& Xte,
            const std::vector<double>& grid) {
            auto design = AdditiveDesign::fit(Xtr, additive.degree);
            const double ybar = ytr.mean();
            Vector yc = ytr.array() - ybar;
            AdditiveOptions path_opts = additive;
            path_opts.tol = additive.cv_tol;
            auto solver = detail::make_additive_solver(design, yc, path_opts);
            Matrix Bte = design.apply(Xte);
            return run_path(solver, yc, grid, Xte.rows(), options, [&]() -> Vector {
                return (Bte * solver.theta()).array() + ybar;
            });
        });
}

}  // namespace arcs::selection
