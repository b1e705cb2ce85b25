#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "arcs/numerics.hpp"
#include "arcs/rng.hpp"
#include "arcs/selected_set.hpp"

namespace arcs::selection {

//---------------------------------------------------------------------------//
// Lasso
//---------------------------------------------------------------------------//

struct LassoOptions {
    bool standardize = true;
    // Convergence: max_j (x_j'x_j/n) dbeta_j^2 <= tol * ||y - ybar||^2 / n
    // over a sweep. cv_tol applies along cross-validation paths.
    double tol = 1e-14;
    double cv_tol = 1e-7;
    std::size_t max_sweeps = 100000;
};

/// Minimizer of (1/n)||y - mu - X beta||^2 + lambda ||beta||_1.
struct LassoFit {
    double intercept = 0.0;
    Vector coefficients;  // original covariate scale
    double lambda = 0.0;
    int arm = -1;
    std::size_t iterations = 0;
};

/// Column centring (and optionally unit population-sd scaling) learned on a
/// training matrix. Zero-variance columns are flagged unusable and never
/// enter the model.
struct StandardizedDesign {
    Matrix x;  // transformed training matrix
    Vector center;
    Vector scale;
    std::vector<bool> usable;

    static StandardizedDesign fit(const Matrix& X, bool standardize);
    Matrix apply(const Matrix& X) const;
};

/// (2/n) max_j |x_j'(y - ybar)| over the internally transformed columns:
/// the smallest penalty at which every coefficient is zero.
double lasso_lambda_max(const Matrix& X, const Vector& y, bool standardize = true);

LassoFit lasso_fit(const Matrix& X, const Vector& y, double lambda,
                   const LassoOptions& options = {});

/// Objective (1/n)||y - mu - X beta||^2 + lambda ||beta~||_1 evaluated in the
/// solver's internal (standardized) coordinates.
double lasso_objective(const Matrix& X, const Vector& y, const LassoFit& fit,
                       bool standardize = true);

SelectedSet support(const LassoFit& fit, double zero_tol = 1e-8);

//---------------------------------------------------------------------------//
// Cross-validation
//---------------------------------------------------------------------------//

enum class CvRule { lambda_min, one_se };

struct CvOptions {
    std::size_t folds = 5;
    std::size_t grid_size = 100;
    double min_ratio = 1e-3;
    CvRule rule = CvRule::lambda_min;
    // Path truncation: a fold's path stops once R^2 exceeds max_r2 or grows
    // by less than min_r2_gain * R^2 between grid points, after at least
    // min_path points. Later grid points reuse the last fit.
    bool early_stop = true;
    double max_r2 = 0.999;
    double min_r2_gain = 1e-5;
    std::size_t min_path = 5;
};

struct CvResult {
    double lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_mean;  // pooled out-of-fold mean squared error
    std::vector<double> cv_se;    // sd of per-fold MSE / sqrt(folds)
    std::size_t folds_used = 0;
    bool folds_reduced = false;   // n < requested folds
};

/// grid_size log-spaced values from lambda_max down to min_ratio*lambda_max.
std::vector<double> lambda_grid(double lambda_max, std::size_t grid_size, double min_ratio);

/// fold[i] for observation i: a seeded shuffle, then position modulo folds.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, Rng& rng);

/// Picks the index into cv_mean according to the rule.
std::size_t choose_lambda_index(const std::vector<double>& cv_mean,
                                const std::vector<double>& cv_se, CvRule rule);

CvResult cv_lambda(const Matrix& X, const Vector& y, const CvOptions& options, Rng& rng,
                   const LassoOptions& lasso = {});

//---------------------------------------------------------------------------//
// Sparse additive model (group lasso over a polynomial basis)
//---------------------------------------------------------------------------//

struct BasisSpec {
    int degree = 3;
    Vector centers;  // one per covariate
};

/// (x - c, (x - c)^2, ..., (x - c)^degree)
Vector basis_expand(double x, int degree, double center);

/// Expanded, centred and per-group orthonormalized design: every block B_j
/// satisfies B_j'B_j / n = I on the training rows. Blocks whose monomials are
/// linearly dependent (binary covariates) keep only their independent
/// directions.
class AdditiveDesign {
   public:
    static AdditiveDesign fit(const Matrix& X, int degree);

    /// Block matrix for new rows, using the training transformation.
    Matrix apply(const Matrix& X) const;

    const Matrix& blocks() const { return blocks_; }
    std::size_t groups() const { return offsets_.size(); }
    Eigen::Index offset(std::size_t j) const { return offsets_[j]; }
    Eigen::Index width(std::size_t j) const { return widths_[j]; }
    const BasisSpec& basis() const { return basis_; }

    /// Maps block coefficients back to the raw monomial basis.
    Vector raw_coefficients(std::size_t j, const Vector& theta) const;
    /// Training mean of the raw monomial columns of group j.
    const Vector& raw_means(std::size_t j) const { return raw_means_[j]; }

   private:
    Matrix raw_block(const Matrix& X, std::size_t j) const;

    BasisSpec basis_;
    Matrix blocks_;
    std::vector<Eigen::Index> offsets_;
    std::vector<Eigen::Index> widths_;
    std::vector<Vector> raw_means_;
    std::vector<Matrix> transforms_;  // degree x width
};

struct AdditiveOptions {
    int degree = 3;
    double tol = 1e-14;  // as for LassoOptions, per block
    double cv_tol = 1e-7;
    std::size_t max_sweeps = 50000;
};

struct AdditiveFit {
    double intercept = 0.0;
    std::vector<Vector> group_coefficients;  // raw monomial basis, length degree
    double lambda = 0.0;
    BasisSpec basis;
    int arm = -1;
    std::size_t iterations = 0;

    double block_norm(std::size_t j) const { return group_coefficients[j].norm(); }
    double predict(std::span<const double> x) const;
};

/// max_j (2/n)||B_j'(y - ybar)|| / sqrt(d_j)
double additive_lambda_max(const Matrix& X, const Vector& y, int degree = 3);

/// Minimizer of (1/n)||y - mu - sum_j B_j theta_j||^2 + lambda sum_j sqrt(d_j)||theta_j||.
AdditiveFit additive_fit(const Matrix& X, const Vector& y, double lambda,
                         const AdditiveOptions& options = {});

CvResult cv_lambda_additive(const Matrix& X, const Vector& y, const CvOptions& options,
                            Rng& rng, const AdditiveOptions& additive = {});

SelectedSet additive_support(const AdditiveFit& fit, double zero_tol = 1e-8);

//---------------------------------------------------------------------------//
// Per-arm selection with support intersection
//---------------------------------------------------------------------------//

enum class Mode { lasso, additive };

struct SelectionOptions {
    Mode mode = Mode::lasso;
    CvOptions cv;
    LassoOptions lasso;
    AdditiveOptions additive;
    double zero_tol = 1e-8;
    std::size_t min_arm_size = 3;
};

struct ArmFit {
    std::optional<LassoFit> lasso;
    std::optional<AdditiveFit> additive;
    CvResult cv;
    SelectedSet support;
};

struct SelectionResult {
    std::array<std::optional<ArmFit>, 2> arms;
    SelectedSet selected;
    bool stale = false;  // an arm was too small; `selected` is the previous set
};

/// Fits each arm on its own rows (arms[i] in {0, 1}), then intersects the
/// two supports. Arms with fewer than min_arm_size patients leave the
/// previous set in place and mark the result stale.
SelectionResult arcs_select(const Matrix& X, std::span<const int> arms, const Vector& y,
                            const SelectionOptions& options, Rng& rng,
                            const SelectedSet& previous);

}  // namespace arcs::selection
