#include <Eigen/QR>
#include <cmath>
#include <string>

#include "arcs/error.hpp"
#include "arcs/simulate.hpp"

namespace arcs::simulate {

std::optional<CalibrationForm> parse_form(std::string_view name) {
    if (name == "linear") return CalibrationForm::linear;
    if (name == "quadratic") return CalibrationForm::quadratic;
    return std::nullopt;
}

namespace {

void require_complete(const CsvTable& data, std::size_t col) {
    const auto c = data.values.col(static_cast<Eigen::Index>(col));
    require(c.allFinite(), ErrorCode::calibration,
            "column '" + data.header[col] + "' has missing or non-finite values");
}

bool is_binary(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (v(i) != 0.0 && v(i) != 1.0) return false;
    return true;
}

}  // namespace

Calibration calibrate_pseudo_trial(const CsvTable& data, const std::string& outcome_column,
                                   const std::vector<std::string>& covariate_columns,
                                   CalibrationForm form, const std::string& arm_column) {
    require(!covariate_columns.empty(), ErrorCode::calibration, "no model covariates declared");
    const std::size_t y_col = data.column(outcome_column);
    const auto arm_col = data.find(arm_column);
    require(!arm_col || *arm_col != y_col, ErrorCode::calibration,
            "outcome and arm columns must differ");

    Calibration cal;
    cal.has_arm = arm_col.has_value();
    std::vector<std::size_t> pool_idx;
    for (std::size_t j = 0; j < data.header.size(); ++j) {
        if (j == y_col || (arm_col && j == *arm_col)) continue;
        pool_idx.push_back(j);
        cal.pool_columns.push_back(data.header[j]);
    }
    require(!pool_idx.empty(), ErrorCode::calibration, "data has no covariate columns");

    require_complete(data, y_col);
    if (arm_col) require_complete(data, *arm_col);
    for (auto j : pool_idx) require_complete(data, j);

    // Model covariates as positions within the pool.
    std::vector<std::size_t> model_pos;
    for (const auto& name : covariate_columns) {
        std::optional<std::size_t> pos;
        for (std::size_t k = 0; k < cal.pool_columns.size(); ++k)
            if (cal.pool_columns[k] == name) pos = k;
        require(pos.has_value(), ErrorCode::calibration,
                "declared covariate '" + name + "' is not a covariate column of the data");
        model_pos.push_back(*pos);
    }
    cal.true_set = SelectedSet(model_pos);
    require(cal.true_set.size() == model_pos.size(), ErrorCode::calibration,
            "declared covariates contain duplicates");

    const Eigen::Index rows = data.values.rows();
    cal.pool.resize(rows, static_cast<Eigen::Index>(pool_idx.size()));
    for (std::size_t k = 0; k < pool_idx.size(); ++k)
        cal.pool.col(static_cast<Eigen::Index>(k)) = data.values.col(static_cast<Eigen::Index>(pool_idx[k]));
    const Vector y = data.values.col(static_cast<Eigen::Index>(y_col));

    // Design columns.
    std::vector<Vector> cols;
    std::vector<ProductTerm> products;  // for the quadratic extras, coef unused
    if (arm_col) {
        Vector t = data.values.col(static_cast<Eigen::Index>(*arm_col));
        require(is_binary(t), ErrorCode::calibration,
                "arm column '" + arm_column + "' must contain only 0 and 1");
        cols.push_back(t);
        cols.push_back(Vector::Ones(rows) - t);
        cal.term_names = {"arm1", "arm0"};
    } else {
        cols.push_back(Vector::Ones(rows));
        cal.term_names = {"intercept"};
    }
    for (std::size_t k = 0; k < model_pos.size(); ++k) {
        cols.push_back(cal.pool.col(static_cast<Eigen::Index>(model_pos[k])));
        cal.term_names.push_back(covariate_columns[k]);
    }
    if (form == CalibrationForm::quadratic) {
        for (std::size_t k = 0; k < model_pos.size(); ++k) {
            Vector c = cal.pool.col(static_cast<Eigen::Index>(model_pos[k]));
            if (is_binary(c)) continue;  // x^2 = x
            cols.push_back(c.cwiseProduct(c));
            cal.term_names.push_back(covariate_columns[k] + "^2");
            products.push_back({model_pos[k], model_pos[k], 0.0});
        }
        for (std::size_t a = 0; a < model_pos.size(); ++a)
            for (std::size_t b = a + 1; b < model_pos.size(); ++b) {
                cols.push_back(cal.pool.col(static_cast<Eigen::Index>(model_pos[a]))
                                   .cwiseProduct(cal.pool.col(static_cast<Eigen::Index>(model_pos[b]))));
                cal.term_names.push_back(covariate_columns[a] + ":" + covariate_columns[b]);
                products.push_back({model_pos[a], model_pos[b], 0.0});
            }
    }

    const auto m = static_cast<Eigen::Index>(cols.size());
    require(rows >= m + 2, ErrorCode::calibration,
            "calibration needs at least " + std::to_string(m + 2) + " rows for " +
                std::to_string(m) + " terms, data has " + std::to_string(rows));
    Matrix D(rows, m);
    for (Eigen::Index j = 0; j < m; ++j) D.col(j) = cols[static_cast<std::size_t>(j)];

    Eigen::ColPivHouseholderQR<Matrix> qr(D);
    qr.setThreshold(1e-10);
    if (qr.rank() < m) {
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < m; ++k) {
            if (!names.empty()) names += ", ";
            names += cal.term_names[static_cast<std::size_t>(perm(k))];
        }
        fail(ErrorCode::calibration,
             "rank-deficient calibration design; collinear columns: " + names);
    }
    cal.coefficients = qr.solve(y);

    OutcomeModel model;
    model.kind = OutcomeKind::calibrated;
    model.noise_sd = 1.0;
    model.beta = Vector::Zero(cal.pool.cols());
    Eigen::Index next = 0;
    if (arm_col) {
        model.mu1 = cal.coefficients(next++);
        model.mu0 = cal.coefficients(next++);
    } else {
        model.mu0 = cal.coefficients(next++);
        model.mu1 = model.mu0 + 1.0;
    }
    for (auto pos : model_pos) model.beta(static_cast<Eigen::Index>(pos)) = cal.coefficients(next++);
    for (auto& term : products) {
        term.coef = cal.coefficients(next++);
        model.terms.push_back(term);
    }
    cal.model = std::move(model);
    return cal;
}

}  // namespace arcs::simulate
