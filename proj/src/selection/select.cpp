#include "arcs/error.hpp"
#include "arcs/selection.hpp"

namespace arcs::selection {

SelectionResult arcs_select(const Matrix& X, std::span<const int> arms, const Vector& y,
                            const SelectionOptions& options, Rng& rng,
                            const SelectedSet& previous) {
    require(static_cast<std::size_t>(X.rows()) == arms.size() && X.rows() == y.size(),
            ErrorCode::contract, "arcs_select: history size mismatch");

    std::array<std::vector<Eigen::Index>, 2> rows;
    for (std::size_t i = 0; i < arms.size(); ++i) {
        require(arms[i] == 0 || arms[i] == 1, ErrorCode::contract,
                "arcs_select: assignments must be 0 or 1");
        rows[static_cast<std::size_t>(arms[i])].push_back(static_cast<Eigen::Index>(i));
    }

    SelectionResult result;
    if (rows[0].size() < options.min_arm_size || rows[1].size() < options.min_arm_size) {
        result.selected = previous;
        result.stale = true;
        return result;
    }

    for (int a = 0; a < 2; ++a) {
        const auto& idx = rows[static_cast<std::size_t>(a)];
        Matrix Xa(static_cast<Eigen::Index>(idx.size()), X.cols());
        Vector ya(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            Xa.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
            ya(static_cast<Eigen::Index>(k)) = y(idx[k]);
        }
        ArmFit arm;
        if (options.mode == Mode::lasso) {
            arm.cv = cv_lambda(Xa, ya, options.cv, rng, options.lasso);
            auto fit = lasso_fit(Xa, ya, arm.cv.lambda, options.lasso);
            fit.arm = a;
            arm.support = support(fit, options.zero_tol);
            arm.lasso = std::move(fit);
        } else {
            arm.cv = cv_lambda_additive(Xa, ya, options.cv, rng, options.additive);
            auto fit = additive_fit(Xa, ya, arm.cv.lambda, options.additive);
            fit.arm = a;
            arm.support = additive_support(fit, options.zero_tol);
            arm.additive = std::move(fit);
        }
        result.arms[static_cast<std::size_t>(a)] = std::move(arm);
    }
    result.selected = intersect_supports(result.arms[0]->support, result.arms[1]->support);
    return result;
}

}  // namespace arcs::selection
