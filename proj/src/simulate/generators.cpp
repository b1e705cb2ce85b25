#include <cmath>

#include "arcs/error.hpp"
#include "arcs/simulate.hpp"

namespace arcs::simulate {

Matrix gen_gaussian_ar1(std::size_t n, std::size_t p, double corr, Rng& rng) {
    require(std::abs(corr) < 1.0, ErrorCode::config, "AR(1) correlation must satisfy |corr| < 1");
    const auto P = static_cast<Eigen::Index>(p);
    const auto N = static_cast<Eigen::Index>(n);
    Matrix sigma(P, P);
    for (Eigen::Index i = 0; i < P; ++i)
        for (Eigen::Index j = 0; j < P; ++j)
            sigma(i, j) = std::pow(corr, static_cast<double>(std::abs(i - j)));
    Matrix L = numerics::chol_lower(sigma);

    Matrix z(N, P);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < P; ++j) z(i, j) = rng.normal();
    return z * L.transpose();
}

Matrix gen_mixed(std::size_t n, std::size_t p, Rng& rng, double corr) {
    require(p >= 5, ErrorCode::config, "mixed covariates need p >= 5");
    const auto N = static_cast<Eigen::Index>(n);
    const auto P = static_cast<Eigen::Index>(p);
    Matrix X = Matrix::Zero(N, P);
    X.leftCols(P - 4) = gen_gaussian_ar1(n, p - 4, corr, rng);
    for (Eigen::Index i = 0; i < N; ++i) {
        const bool z1 = rng.bernoulli(0.5);
        const bool z2 = rng.bernoulli(0.5);
        // cells (1,1), (1,0), (0,1), (0,0)
        const Eigen::Index cell = (z1 ? 0 : 2) + (z2 ? 0 : 1);
        X(i, P - 4 + cell) = 1.0;
    }
    return X;
}

}  // namespace arcs::simulate
