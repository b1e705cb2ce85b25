#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "arcs/error.hpp"
#include "arcs/selection.hpp"
#include "arcs/simulate.hpp"
#include "testkit.hpp"

using namespace arcs;
using namespace arcs::selection;

namespace {

// Coefficients on the original scale from a standardized-scale solution.
Vector destandardize(const Vector& b, const testkit::Standardized& s) {
    return b.cwiseQuotient(s.scale);
}

double max_kkt_violation(const Matrix& X, const Vector& y, const LassoFit& fit) {
    auto s = testkit::standardize(X);
    const double n = static_cast<double>(X.rows());
    Vector r = (y - X * fit.coefficients).array() - fit.intercept;
    Vector b = fit.coefficients.cwiseProduct(s.scale);
    Vector g = (2.0 / n) * s.z.transpose() * r;
    double worst = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        double v = b(j) == 0.0 ? std::max(0.0, std::abs(g(j)) - fit.lambda)
                               : std::abs(g(j) - fit.lambda * (b(j) > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

LassoFit with_coefficients(std::vector<double> c) {
    LassoFit fit;
    fit.coefficients = Eigen::Map<Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
    return fit;
}

}  // namespace

TEST_CASE("lasso on a zero response") {
    auto rng = testkit::test_rng(10);
    Matrix X = testkit::gaussian(20, 5, rng);
    auto fit = lasso_fit(X, Vector::Zero(20), 0.1);
    CHECK(fit.intercept == 0.0);
    CHECK(fit.coefficients.isZero());
}

TEST_CASE("lasso at and above lambda_max") {
    auto rng = testkit::test_rng(11);
    Matrix X = testkit::gaussian(30, 6, rng);
    Vector y = X.col(2) * 2.0 + testkit::gaussian(30, rng);
    y.array() += 5.0;

    auto s = testkit::standardize(X);
    Vector yc = y.array() - y.mean();
    const double want = (2.0 / 30.0) * (s.z.transpose() * yc).cwiseAbs().maxCoeff();
    const double lmax = lasso_lambda_max(X, y);
    CHECK(lmax == doctest::Approx(want).epsilon(1e-12));

    for (double f : {1.0, 1.5, 10.0}) {
        auto fit = lasso_fit(X, y, f * lmax);
        CHECK(fit.coefficients.isZero());
        CHECK(fit.intercept == doctest::Approx(y.mean()).epsilon(1e-12));
    }
    auto below = lasso_fit(X, y, 0.99 * lmax);
    CHECK_FALSE(below.coefficients.isZero());

    // Exactly zero at lambda_max despite rounding in the solver's updates.
    for (int rep = 0; rep < 50; ++rep) {
        Matrix Xr = testkit::gaussian(40 + rep, 1 + rep % 9, rng);
        Vector yr = 3.0 * Xr.col(0) + 0.1 * testkit::gaussian(Xr.rows(), rng);
        CHECK(lasso_fit(Xr, yr, lasso_lambda_max(Xr, yr)).coefficients.isZero(0.0));
    }
}

TEST_CASE("lasso matches a plain proximal-gradient oracle on an 8x3 instance") {
    auto rng = testkit::test_rng(12);
    Matrix X = testkit::gaussian(8, 3, rng);
    Vector beta(3);
    beta << 1.0, -2.0, 0.0;
    Vector y = X * beta + 0.5 * testkit::gaussian(8, rng);

    auto s = testkit::standardize(X);
    Vector yc = y.array() - y.mean();
    Vector b = testkit::prox_lasso(s.z, yc, 0.05, 1000000, false);
    Vector want = destandardize(b, s);

    auto fit = lasso_fit(X, y, 0.05);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(fit.coefficients(j) - want(j)) <= 1e-6);
    const double intercept = y.mean() - s.center.dot(want);
    CHECK(std::abs(fit.intercept - intercept) <= 1e-6);
}

TEST_CASE("lasso matches an accelerated oracle and satisfies KKT on random instances") {
    auto rng = testkit::test_rng(13);
    double worst_coef = 0, worst_kkt = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto n = static_cast<Eigen::Index>(6 + rng.below(35));
        const auto p = static_cast<Eigen::Index>(1 + rng.below(15));
        Matrix X = testkit::gaussian(n, p, rng);
        for (Eigen::Index j = 0; j < p; ++j) X.col(j) *= 0.2 + 3.0 * rng.uniform();
        Vector y = testkit::gaussian(n, rng);
        for (Eigen::Index j = 0; j < std::min<Eigen::Index>(p, 3); ++j) y += (1.0 + j) * X.col(j);
        const double lambda = lasso_lambda_max(X, y) * (0.02 + 0.5 * rng.uniform());

        auto fit = lasso_fit(X, y, lambda);
        auto s = testkit::standardize(X);
        Vector yc = y.array() - y.mean();
        Vector want = destandardize(testkit::prox_lasso(s.z, yc, lambda, 200000, true), s);
        worst_coef = std::max(worst_coef, (fit.coefficients - want).cwiseAbs().maxCoeff());
        worst_kkt = std::max(worst_kkt, max_kkt_violation(X, y, fit));

        // Objective never exceeds the all-zero fit.
        LassoFit zero = fit;
        zero.coefficients.setZero();
        zero.intercept = y.mean();
        CHECK(lasso_objective(X, y, fit) <= lasso_objective(X, y, zero) + 1e-12);
    }
    CHECK(worst_coef <= 1e-6);
    CHECK(worst_kkt <= 1e-6);
}

TEST_CASE("lasso leaves a zero-variance column at zero") {
    auto rng = testkit::test_rng(14);
    Matrix X = testkit::gaussian(25, 3, rng);
    X.col(1).setConstant(2.5);
    Vector y = X.col(0) * 3.0 + testkit::gaussian(25, rng);
    auto fit = lasso_fit(X, y, 0.01);
    CHECK(fit.coefficients(1) == 0.0);
    CHECK(fit.coefficients(0) != 0.0);
}

TEST_CASE("lasso reports non-convergence") {
    auto rng = testkit::test_rng(15);
    Matrix X = testkit::gaussian(30, 8, rng);
    X.col(1) = X.col(0) + 1e-3 * X.col(1);
    Vector y = X.col(0) + X.col(1) + testkit::gaussian(30, rng);
    LassoOptions opts;
    opts.max_sweeps = 1;
    try {
        lasso_fit(X, y, 1e-4, opts);
        FAIL("expected a convergence error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::convergence);
    }
}

TEST_CASE("support thresholds") {
    CHECK(support(with_coefficients({0, 3, -1.5, 0})) == SelectedSet{1, 2});
    CHECK(support(with_coefficients({0, 0, 0})).empty());
    CHECK(support(with_coefficients({1e-12, 0.2}), 1e-8) == SelectedSet{1});
}

TEST_CASE("support intersection") {
    CHECK(intersect_supports({1, 2, 5}, {2, 5, 7}) == SelectedSet{2, 5});
    CHECK(intersect_supports({1}, {}).empty());
    SelectedSet a{0, 3, 4, 9};
    CHECK(intersect_supports(a, a) == a);
    CHECK(set_difference({1, 2, 5}, {2}) == SelectedSet{1, 5});

    auto rng = testkit::test_rng(16);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<std::size_t> va, vb;
        for (std::size_t j = 0; j < 20; ++j) {
            if (rng.bernoulli(0.4)) va.push_back(j);
            if (rng.bernoulli(0.4)) vb.push_back(j);
        }
        SelectedSet A(va), B(vb);
        auto I = intersect_supports(A, B);
        for (auto j : I) {
            CHECK(A.contains(j));
            CHECK(B.contains(j));
        }
        for (auto j : A)
            if (B.contains(j)) CHECK(I.contains(j));
    }
}

TEST_CASE("selected sets sort and deduplicate") {
    SelectedSet s(std::vector<std::size_t>{5, 1, 5, 3});
    CHECK(s.indices() == std::vector<std::size_t>{1, 3, 5});
    CHECK(SelectedSet::all(3) == SelectedSet{0, 1, 2});
    CHECK_THROWS_AS(s.check_range(5), Error);
    CHECK_NOTHROW(s.check_range(6));
}

TEST_CASE("lambda grid") {
    auto g = lambda_grid(2.0, 1, 1e-3);
    REQUIRE(g.size() == 1);
    CHECK(g[0] == 2.0);
    g = lambda_grid(2.0, 4, 1e-3);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == doctest::Approx(2e-3));
    CHECK(g[1] / g[0] == doctest::Approx(0.1));
}

TEST_CASE("cv with a single grid point returns lambda_max") {
    auto rng = testkit::test_rng(17);
    Matrix X = testkit::gaussian(25, 4, rng);
    Vector y = X.col(0) + testkit::gaussian(25, rng);
    CvOptions opts;
    opts.grid_size = 1;
    Rng folds(1, 2, 3);
    auto cv = cv_lambda(X, y, opts, folds);
    CHECK(cv.lambda == lasso_lambda_max(X, y));
}

TEST_CASE("cv keeps a dominant noiseless signal") {
    auto rng = testkit::test_rng(18);
    Matrix X = testkit::gaussian(40, 10, rng);
    Vector y = 2.0 * X.col(1);
    Rng folds(1, 2, 3);
    auto cv = cv_lambda(X, y, CvOptions{}, folds);
    CHECK(support(lasso_fit(X, y, cv.lambda)).contains(1));
}

TEST_CASE("cv reduces folds for tiny samples") {
    auto rng = testkit::test_rng(19);
    Matrix X = testkit::gaussian(4, 2, rng);
    Vector y = testkit::gaussian(4, rng);
    Rng folds(1, 2, 3);
    auto cv = cv_lambda(X, y, CvOptions{}, folds);
    CHECK(cv.folds_reduced);
    CHECK(cv.folds_used == 4);
}

TEST_CASE("cv agrees with an exhaustive re-evaluation of the grid") {
    auto rng = testkit::test_rng(20);
    const Eigen::Index n = 30, p = 10;
    Matrix X = testkit::gaussian(n, p, rng);
    Vector y = 1.5 * X.col(0) - X.col(3) + testkit::gaussian(n, rng);

    CvOptions opts;
    opts.grid_size = 25;
    opts.early_stop = false;
    Rng folds(99, 1, 4);
    Rng folds_copy = folds;
    LassoOptions tight;
    tight.cv_tol = 1e-14;
    auto cv = cv_lambda(X, y, opts, folds, tight);

    // Folds: Fisher-Yates with below(i), then position modulo K.
    const std::size_t K = 5;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[folds_copy.below(i)]);
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < perm.size(); ++i) fold[perm[i]] = i % K;

    auto full = testkit::standardize(X);
    Vector yc_full = y.array() - y.mean();
    const double lmax = (2.0 / n) * (full.z.transpose() * yc_full).cwiseAbs().maxCoeff();
    std::vector<double> grid(opts.grid_size), sse(opts.grid_size, 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k)
        grid[k] = lmax * std::pow(opts.min_ratio, static_cast<double>(k) / (grid.size() - 1));

    for (std::size_t f = 0; f < K; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (Eigen::Index i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
        Matrix Xtr = X(tr, Eigen::all), Xte = X(te, Eigen::all);
        Vector ytr = y(tr), yte = y(te);
        auto s = testkit::standardize(Xtr);
        Vector yc = ytr.array() - ytr.mean();
        for (std::size_t k = 0; k < grid.size(); ++k) {
            Vector beta = destandardize(testkit::prox_lasso(s.z, yc, grid[k], 20000, true), s);
            const double mu = ytr.mean() - s.center.dot(beta);
            Vector pred = (Xte * beta).array() + mu;
            sse[k] += (pred - yte).squaredNorm();
        }
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(cv.cv_mean[k] == doctest::Approx(sse[k] / n).epsilon(1e-6));
        if (sse[k] < sse[best]) best = k;
    }
    CHECK(cv.lambda == doctest::Approx(grid[best]).epsilon(1e-12));

    // The default truncated path picks the same penalty on this instance.
    Rng again(99, 1, 4);
    CvOptions defaults;
    defaults.grid_size = 25;
    CHECK(cv_lambda(X, y, defaults, again).lambda == cv.lambda);
}

TEST_CASE("one-standard-error rule picks the largest penalty within one se") {
    std::vector<double> mean{5.0, 3.0, 2.2, 2.0, 2.1};
    std::vector<double> se{0.1, 0.1, 0.3, 0.3, 0.3};
    CHECK(choose_lambda_index(mean, se, CvRule::lambda_min) == 3);
    CHECK(choose_lambda_index(mean, se, CvRule::one_se) == 2);
}

TEST_CASE("basis_expand") {
    CHECK(basis_expand(1.7, 3, 1.7).isZero());
    CHECK(basis_expand(2.0, 3, 1.0) == Vector::Ones(3));
    Vector v = basis_expand(2.0, 2, 0.0);
    CHECK(v(0) == 2.0);
    CHECK(v(1) == 4.0);
}

TEST_CASE("additive design blocks are orthonormal") {
    auto rng = testkit::test_rng(21);
    Matrix X = testkit::gaussian(50, 4, rng);
    X.col(3) = (X.col(3).array() > 0).cast<double>();
    auto design = AdditiveDesign::fit(X, 3);
    const double n = 50.0;
    for (std::size_t j = 0; j < design.groups(); ++j) {
        Matrix B = design.blocks().middleCols(design.offset(j), design.width(j));
        Matrix G = B.transpose() * B / n;
        CHECK((G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(B.colwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(design.width(0) == 3);
    CHECK(design.width(3) == 1);
    CHECK((design.apply(X) - design.blocks()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("additive fit: zero response and full shrinkage") {
    auto rng = testkit::test_rng(22);
    Matrix X = testkit::gaussian(40, 5, rng);
    auto zero = additive_fit(X, Vector::Zero(40), 0.1);
    for (std::size_t j = 0; j < 5; ++j) CHECK(zero.block_norm(j) == 0.0);

    Vector y = X.col(1).array().square() * 2.0 + X.col(2).array();
    const double lmax = additive_lambda_max(X, y);
    auto design = AdditiveDesign::fit(X, 3);
    Vector yc = y.array() - y.mean();
    double want = 0;
    for (std::size_t j = 0; j < design.groups(); ++j) {
        Matrix B = design.blocks().middleCols(design.offset(j), design.width(j));
        want = std::max(want, (2.0 / 40.0) * (B.transpose() * yc).norm() /
                                  std::sqrt(static_cast<double>(design.width(j))));
    }
    CHECK(lmax == doctest::Approx(want).epsilon(1e-12));
    auto fit = additive_fit(X, y, lmax);
    for (std::size_t j = 0; j < 5; ++j) CHECK(fit.block_norm(j) == 0.0);
    CHECK(fit.intercept == doctest::Approx(y.mean()));
    CHECK(additive_support(additive_fit(X, y, 0.5 * lmax)).contains(1));
}

TEST_CASE("additive fit matches a group proximal-gradient oracle") {
    auto rng = testkit::test_rng(23);
    const Eigen::Index n = 60, p = 4;
    Matrix X = testkit::gaussian(n, p, rng);
    Vector y = 5.0 * X.col(0).array().square() + 0.01 * testkit::gaussian(n, rng).array();
    const double lambda = 0.3 * additive_lambda_max(X, y);
    auto fit = additive_fit(X, y, lambda);

    auto design = AdditiveDesign::fit(X, 3);
    const Matrix& B = design.blocks();
    Vector yc = y.array() - y.mean();
    Matrix H = (2.0 / n) * B.transpose() * B;
    Vector g0 = (2.0 / n) * B.transpose() * yc;
    const double L = Eigen::SelfAdjointEigenSolver<Matrix>(H).eigenvalues().maxCoeff();
    Vector theta = Vector::Zero(B.cols()), v = theta, prev = theta;
    double t = 1.0;
    for (int it = 0; it < 100000; ++it) {
        Vector next = v - (H * v - g0) / L;
        for (std::size_t j = 0; j < design.groups(); ++j) {
            auto blk = next.segment(design.offset(j), design.width(j));
            const double thr = lambda * std::sqrt(static_cast<double>(design.width(j))) / L;
            const double norm = blk.norm();
            blk *= norm > thr ? 1.0 - thr / norm : 0.0;
        }
        if ((v - next).dot(next - theta) > 0) t = 1.0;
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        prev = theta;
        theta = next;
        v = theta + ((t - 1.0) / tn) * (theta - prev);
        t = tn;
    }
    for (std::size_t j = 0; j < design.groups(); ++j) {
        Vector raw = design.raw_coefficients(j, theta.segment(design.offset(j), design.width(j)));
        CHECK(std::abs(fit.block_norm(j) - raw.norm()) <= 1e-5);
    }
    CHECK(fit.block_norm(0) > 0.0);
    for (std::size_t j = 1; j < 4; ++j) CHECK(fit.block_norm(j) == 0.0);
}

TEST_CASE("arcs_select: small arm keeps the previous set") {
    auto rng = testkit::test_rng(24);
    Matrix X = testkit::gaussian(10, 4, rng);
    Vector y = testkit::gaussian(10, rng);
    std::vector<int> arms{1, 1, 1, 1, 1, 1, 1, 1, 0, 0};
    Rng sel(1, 1, 4);
    SelectedSet previous{2, 3};
    auto result = arcs_select(X, arms, y, SelectionOptions{}, sel, previous);
    CHECK(result.stale);
    CHECK(result.selected == previous);
}

TEST_CASE("arcs_select on pure noise runs without error") {
    auto rng = testkit::test_rng(25);
    Matrix X = testkit::gaussian(40, 6, rng);
    Vector y = testkit::gaussian(40, rng);
    std::vector<int> arms(40);
    for (int i = 0; i < 40; ++i) arms[i] = i % 2;
    Rng sel(1, 1, 4);
    auto result = arcs_select(X, arms, y, SelectionOptions{}, sel, {});
    CHECK_FALSE(result.stale);
    CHECK(result.selected.size() <= 6);
}

TEST_CASE("arcs_select is deterministic") {
    auto rng = testkit::test_rng(26);
    Matrix X = testkit::gaussian(60, 8, rng);
    Vector y = 2.0 * X.col(0) + testkit::gaussian(60, rng);
    std::vector<int> arms(60);
    for (int i = 0; i < 60; ++i) arms[i] = (i * 7) % 3 == 0;
    for (auto mode : {Mode::lasso, Mode::additive}) {
        SelectionOptions opts;
        opts.mode = mode;
        Rng a(5, 6, 4), b(5, 6, 4);
        auto ra = arcs_select(X, arms, y, opts, a, {});
        auto rb = arcs_select(X, arms, y, opts, b, {});
        CHECK(ra.selected == rb.selected);
        for (int k = 0; k < 2; ++k) {
            CHECK(ra.arms[k]->cv.lambda == rb.arms[k]->cv.lambda);
            CHECK(ra.arms[k]->cv.cv_mean == rb.arms[k]->cv.cv_mean);
        }
    }
}

TEST_CASE("arcs_select recovers the linear example's influential set") {
    auto setup = simulate::example_setup(simulate::Example::ex1a, 120, 10);
    int hits = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        auto cov = stream(42, static_cast<std::uint64_t>(rep), Substream::covariates);
        auto noise = stream(42, static_cast<std::uint64_t>(rep), Substream::noise);
        auto coin = stream(42, static_cast<std::uint64_t>(rep), Substream::design);
        auto sel = stream(42, static_cast<std::uint64_t>(rep), Substream::selection);
        Matrix X = setup.generate(120, 10, cov);
        std::vector<int> arms(120);
        Vector y(120);
        for (Eigen::Index i = 0; i < 120; ++i) {
            arms[i] = coin.bernoulli(0.5);
            y(i) = simulate::outcome(setup.model, X.row(i).transpose(), arms[i], noise);
        }
        auto result = arcs_select(X, arms, y, SelectionOptions{}, sel, {});
        if (intersect_supports(result.selected, setup.true_set) == setup.true_set) ++hits;
    }
    CHECK(hits >= 190);
}
