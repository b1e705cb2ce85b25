#include "arcs/checks.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "arcs/balance.hpp"
#include "arcs/engine.hpp"
#include "arcs/numerics.hpp"
#include "arcs/rng.hpp"
#include "arcs/selection.hpp"
#include "arcs/simulate.hpp"

namespace arcs::checks {

namespace {

constexpr std::uint32_t kCheckStream = 0xC0FFEE;

Rng check_rng(std::uint64_t seed, std::uint32_t which) {
    return Rng(seed, kCheckStream, static_cast<std::uint32_t>(Substream::user) + which);
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
    return out;
}

Vector random_vector(Eigen::Index n, Rng& rng) {
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = rng.normal();
    return out;
}

CheckResult finish(std::string name, double worst, double limit, std::string detail = {}) {
    return {std::move(name), worst <= limit, worst, limit, std::move(detail)};
}

struct LassoInstance {
    Matrix X;
    Vector y;
    double lambda = 0.0;
};

LassoInstance lasso_instance(Rng& rng) {
    LassoInstance inst;
    const auto n = static_cast<Eigen::Index>(30 + rng.below(31));
    const auto p = static_cast<Eigen::Index>(5 + rng.below(56));
    inst.X = random_matrix(n, p, rng);
    for (Eigen::Index j = 0; j < p; ++j) inst.X.col(j) = inst.X.col(j) * (0.5 + 2.0 * rng.uniform()) + Vector::Constant(n, rng.normal());
    Vector beta = Vector::Zero(p);
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(p, 4); ++j) beta(j) = 2.0 * rng.normal();
    inst.y = inst.X * beta + random_vector(n, rng);
    const double fraction = 0.05 + 0.6 * rng.uniform();
    inst.lambda = fraction * selection::lasso_lambda_max(inst.X, inst.y);
    return inst;
}

// Centred, population-sd scaled columns.
Matrix standardize(const Matrix& X, Vector& scale) {
    Matrix Z = X.rowwise() - X.colwise().mean();
    scale.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        scale(j) = std::sqrt(Z.col(j).squaredNorm() / static_cast<double>(X.rows()));
        Z.col(j) /= scale(j);
    }
    return Z;
}

// FISTA with adaptive restart on (1/n)||y - Z theta||^2 + lambda ||theta||_1.
Vector proximal_gradient(const Matrix& Z, const Vector& y, double lambda) {
    const double n = static_cast<double>(Z.rows());
    Eigen::JacobiSVD<Matrix> svd(Z);
    const double top = svd.singularValues()(0);
    const double step = n / (2.0 * top * top);
    auto soft = [&](const Vector& v) {
        Vector out(v.size());
        const double t = step * lambda;
        for (Eigen::Index j = 0; j < v.size(); ++j)
            out(j) = v(j) > t ? v(j) - t : (v(j) < -t ? v(j) + t : 0.0);
        return out;
    };
    Vector theta = Vector::Zero(Z.cols());
    Vector momentum = theta;
    double t = 1.0;
    for (int it = 0; it < 2000000; ++it) {
        Vector grad = (2.0 / n) * (Z.transpose() * (Z * momentum - y));
        Vector next = soft(momentum - step * grad);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if ((momentum - next).dot(next - theta) > 0) {
            momentum = next;
            t = 1.0;
        } else {
            momentum = next + ((t - 1.0) / t_next) * (next - theta);
            t = t_next;
        }
        const double change = (next - theta).lpNorm<Eigen::Infinity>();
        theta = next;
        if (change < 1e-14 * (1.0 + theta.lpNorm<Eigen::Infinity>()) && it > 10) break;
    }
    return theta;
}

}  // namespace

CheckResult lasso_oracle(std::size_t instances, std::uint64_t seed) {
    Rng rng = check_rng(seed, 1);
    double worst = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
        auto inst = lasso_instance(rng);
        auto fit = selection::lasso_fit(inst.X, inst.y, inst.lambda);
        Vector scale;
        Matrix Z = standardize(inst.X, scale);
        Vector yc = inst.y.array() - inst.y.mean();
        Vector theta = proximal_gradient(Z, yc, inst.lambda);
        Vector beta = theta.cwiseQuotient(scale);
        worst = std::max(worst, (beta - fit.coefficients).lpNorm<Eigen::Infinity>());
    }
    return finish("lasso proximal-gradient oracle", worst, 1e-6,
                  std::to_string(instances) + " instances");
}

CheckResult lasso_kkt(std::size_t instances, std::uint64_t seed) {
    Rng rng = check_rng(seed, 2);
    double worst = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
        auto inst = lasso_instance(rng);
        auto fit = selection::lasso_fit(inst.X, inst.y, inst.lambda);
        Vector scale;
        Matrix Z = standardize(inst.X, scale);
        Vector theta = fit.coefficients.cwiseProduct(scale);
        Vector yc = inst.y.array() - inst.y.mean();
        Vector grad = (2.0 / static_cast<double>(Z.rows())) * (Z.transpose() * (yc - Z * theta));
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            double v = theta(j) != 0.0
                           ? std::abs(grad(j) - inst.lambda * (theta(j) > 0 ? 1.0 : -1.0))
                           : std::max(0.0, std::abs(grad(j)) - inst.lambda);
            worst = std::max(worst, v);
        }
    }
    return finish("lasso KKT residual", worst, 1e-6, std::to_string(instances) + " instances");
}

CheckResult incremental_lambda(std::size_t trials, std::uint64_t seed) {
    auto setup = simulate::example_setup(simulate::Example::ex1a, 40, 10);
    engine::TrialConfig config;
    config.n = 40;
    config.p = 10;
    config.N0 = 10;
    config.N = 5;
    config.method = engine::Method::arcs_cov;
    double worst = 0.0;
    for (std::size_t rep = 0; rep < trials; ++rep) {
        auto run = simulate::run_replication(config, setup, seed, rep);
        const auto& state = run.state;
        balance::ImbalanceState fresh(config.phi, state.imbalance.selected());
        fresh.rebuild(run.covariates, state.assignments, config.n, state.imbalance.selected());
        const Vector& kept = state.imbalance.lambda_vec();
        double err = (kept - fresh.lambda_vec()).lpNorm<Eigen::Infinity>() /
                     (1.0 + fresh.lambda_vec().lpNorm<Eigen::Infinity>());
        worst = std::max(worst, err);
    }
    return finish("incremental Lambda vs recompute", worst, 1e-9,
                  std::to_string(trials) + " ARCS-COV trials");
}

CheckResult imb_delta_identity(std::size_t cases, std::uint64_t seed) {
    Rng rng = check_rng(seed, 3);
    double worst = 0.0;
    for (std::size_t k = 0; k < cases; ++k) {
        const std::size_t s = rng.below(6);
        std::vector<std::size_t> idx(s);
        for (std::size_t j = 0; j < s; ++j) idx[j] = j;
        balance::ImbalanceState state(balance::PhiSpec{}, SelectedSet(idx));
        const auto steps = 1 + rng.below(40);
        for (std::size_t i = 0; i < steps; ++i) {
            Vector x = random_vector(static_cast<Eigen::Index>(s), rng);
            state.add(rng.bernoulli(0.5) ? 1 : 0,
                      balance::phi_cov({x.data(), s}, state.spec()));
        }
        Vector x = random_vector(static_cast<Eigen::Index>(s), rng);
        Vector phi = balance::phi_cov({x.data(), s}, state.spec());
        const Vector& L = state.lambda_vec();
        double direct = (L + phi).squaredNorm() - (L - phi).squaredNorm();
        double err = std::abs(direct - balance::imb_delta(state, phi)) /
                     (1.0 + L.squaredNorm() + phi.squaredNorm());
        worst = std::max(worst, err);
    }
    return finish("imb_delta norm-expansion identity", worst, 1e-9,
                  std::to_string(cases) + " cases");
}

CheckResult mahalanobis_affine(std::size_t cases, std::uint64_t seed) {
    Rng rng = check_rng(seed, 4);
    double worst = 0.0;
    for (std::size_t k = 0; k < cases; ++k) {
        const auto rows = static_cast<Eigen::Index>(8 + rng.below(30));
        // Half the cases have more columns than rows.
        const auto cols = static_cast<Eigen::Index>(k % 2 ? rows + 1 + rng.below(10) : 1 + rng.below(static_cast<std::size_t>(rows - 2)));
        Matrix X = random_matrix(rows, cols, rng);
        std::vector<int> t(static_cast<std::size_t>(rows));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<int>(i % 2);
        rng.shuffle(t.begin(), t.end());
        Matrix A = Matrix::Identity(cols, cols) + 0.3 * random_matrix(cols, cols, rng);
        Vector b = random_vector(cols, rng);
        Matrix Y = (X * A).rowwise() + b.transpose();
        double before = balance::mahalanobis_imb(X, t);
        double after = balance::mahalanobis_imb(Y, t);
        worst = std::max(worst, std::abs(after - before) / std::max(1e-12, std::abs(before)));
    }
    return finish("Mahalanobis affine invariance", worst, 1e-6, std::to_string(cases) + " cases");
}

CheckResult penrose(std::size_t cases, std::uint64_t seed) {
    Rng rng = check_rng(seed, 5);
    double worst = 0.0;
    for (std::size_t k = 0; k < cases; ++k) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(19));
        const auto r = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::size_t>(n)));
        Matrix B = random_matrix(n, r, rng);
        Matrix A = B * B.transpose();
        Matrix P = numerics::pinv(A);
        const double na = A.norm();
        const double np = P.norm();
        worst = std::max(worst, (A * P * A - A).norm() / na);
        worst = std::max(worst, (P * A * P - P).norm() / np);
        worst = std::max(worst, ((A * P).transpose() - A * P).norm() / (A * P).norm());
        worst = std::max(worst, ((P * A).transpose() - P * A).norm() / (P * A).norm());
    }
    return finish("pseudoinverse Penrose identities", worst, 1e-8,
                  std::to_string(cases) + " rank-deficient matrices");
}

CheckResult coin_frequency(std::size_t events, double rho, std::uint64_t seed) {
    Rng rng = check_rng(seed, 6);
    std::size_t preferred = 0;
    for (std::size_t i = 0; i < events; ++i) {
        // Alternate the sign so both branches are exercised.
        const bool arm1_better = i % 2 == 0;
        int arm = engine::biased_coin(arm1_better ? -1.0 : 1.0, rho, rng);
        if (arm == (arm1_better ? 1 : 0)) ++preferred;
    }
    const double freq = static_cast<double>(preferred) / static_cast<double>(events);
    std::ostringstream detail;
    detail << "preferred-arm frequency " << freq << " over " << events << " draws, rho " << rho;
    return finish("biased-coin frequency", std::abs(freq - rho), 0.03, detail.str());
}

CheckResult worker_determinism(std::size_t reps, std::uint64_t seed) {
    auto setup = simulate::example_setup(simulate::Example::ex1a, 60, 10);
    double mismatches = 0.0;
    for (auto method : {engine::Method::arcs_cov, engine::Method::arcs_m, engine::Method::rr}) {
        engine::TrialConfig config;
        config.n = 60;
        config.p = 10;
        config.method = method;
        auto one = simulate::replicate(config, setup, reps, seed, 1);
        auto eight = simulate::replicate(config, setup, reps, seed, 8);
        std::ostringstream a, b;
        simulate::write_per_rep(a, one);
        simulate::write_trajectory(a, one);
        simulate::write_summary_row(a, one.summary);
        simulate::write_per_rep(b, eight);
        simulate::write_trajectory(b, eight);
        simulate::write_summary_row(b, eight.summary);
        if (a.str() != b.str()) mismatches += 1.0;
    }
    return finish("bit-identical output with 1 vs 8 workers", mismatches, 0.0,
                  std::to_string(reps) + " reps each for ARCS-COV, ARCS-M and RR");
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
    return {
        lasso_oracle(50, seed),
        lasso_kkt(50, seed),
        incremental_lambda(100, seed),
        imb_delta_identity(200, seed),
        mahalanobis_affine(100, seed),
        penrose(100, seed),
        coin_frequency(10000, 0.85, seed),
        worker_determinism(16, seed),
    };
}

}  // namespace arcs::checks
