#pragma once

#include "arcs/selection.hpp"
#include "group_cd.hpp"

namespace arcs::selection::detail {

GroupCoordinateDescent make_lasso_solver(const StandardizedDesign& design,
                                         const Vector& centered_y,
                                         const LassoOptions& options);

/// Scatter solver coefficients (usable columns only) back to length p.
Vector expand_lasso_theta(const StandardizedDesign& design, const Vector& theta);

GroupCoordinateDescent make_additive_solver(const AdditiveDesign& design,
                                            const Vector& centered_y,
                                            const AdditiveOptions& options);

}  // namespace arcs::selection::detail
