#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "arcs/error.hpp"
#include "arcs/simulate.hpp"

namespace arcs::simulate {

double f1(double x) { return -2.0 * std::sin(2.0 * x); }
double f2(double x) { return x * x - 1.0 / 3.0; }
double f3(double x) { return x - 0.5; }
double f4(double x) { return std::exp(-x) + std::exp(-1.0) - 1.0; }

OutcomeModel OutcomeModel::linear(std::size_t p) {
    require(p >= 5, ErrorCode::config, "linear example model needs p >= 5");
    OutcomeModel m;
    m.kind = OutcomeKind::linear;
    m.beta = Vector::Zero(static_cast<Eigen::Index>(p));
    m.beta(0) = 3.0;
    m.beta(1) = 1.5;
    m.beta(4) = 2.0;
    return m;
}

OutcomeModel OutcomeModel::mixed_discrete(std::size_t p) {
    require(p >= 9, ErrorCode::config, "mixed example model needs p >= 9");
    OutcomeModel m = linear(p);
    m.kind = OutcomeKind::mixed_discrete;
    m.beta(static_cast<Eigen::Index>(p - 4)) = 1.0;
    return m;
}

OutcomeModel OutcomeModel::additive_nonlinear() {
    OutcomeModel m;
    m.kind = OutcomeKind::additive_nonlinear;
    return m;
}

OutcomeModel OutcomeModel::quadratic_phi() {
    OutcomeModel m;
    m.kind = OutcomeKind::quadratic_phi;
    return m;
}

double OutcomeModel::signal(const Vector& x) const {
    switch (kind) {
        case OutcomeKind::linear:
        case OutcomeKind::mixed_discrete:
            return beta.dot(x);
        case OutcomeKind::calibrated: {
            double s = beta.dot(x);
            for (const auto& t : terms)
                s += t.coef * x(static_cast<Eigen::Index>(t.a)) * x(static_cast<Eigen::Index>(t.b));
            return s;
        }
        case OutcomeKind::additive_nonlinear:
            return f1(x(0)) + f2(x(1)) + f3(x(2)) + f4(x(3));
        case OutcomeKind::quadratic_phi: {
            const double a = x(0), b = x(1);
            return 3 * a + 3 * b + 3 * a * a + 3 * b * b + 3 * a * b;
        }
    }
    return 0.0;
}

void OutcomeModel::validate(std::size_t p) const {
    require(noise_sd > 0 && std::isfinite(noise_sd), ErrorCode::config,
            "noise_sd must be positive");
    switch (kind) {
        case OutcomeKind::linear:
        case OutcomeKind::mixed_discrete:
        case OutcomeKind::calibrated:
            require(beta.size() == static_cast<Eigen::Index>(p), ErrorCode::config,
                    "outcome model has " + std::to_string(beta.size()) +
                        " coefficients for p = " + std::to_string(p));
            for (const auto& t : terms)
                require(t.a < p && t.b < p, ErrorCode::config,
                        "outcome model term refers to a column beyond p");
            break;
        case OutcomeKind::additive_nonlinear:
            require(p >= 4, ErrorCode::config, "additive example model needs p >= 4");
            break;
        case OutcomeKind::quadratic_phi:
            require(p >= 2, ErrorCode::config, "quadratic example model needs p >= 2");
            break;
    }
}

double outcome(const OutcomeModel& model, const Vector& x, int arm, Rng& rng) {
    return model.mean(x, arm) + model.noise_sd * rng.normal();
}

double tau_hat(const engine::TrialState& trial) {
    return balance::difference_in_means(trial.assignments, trial.outcomes);
}

//---------------------------------------------------------------------------//
// Examples
//---------------------------------------------------------------------------//

namespace {

constexpr std::pair<Example, std::string_view> kExamples[] = {
    {Example::ex1a, "1a"}, {Example::ex1b, "1b"}, {Example::ex2, "2"},
    {Example::ex3, "3"},   {Example::ex4, "4"},   {Example::calibrated, "calibrated"},
};

}  // namespace

std::string_view example_name(Example e) {
    for (const auto& [id, name] : kExamples)
        if (id == e) return name;
    return "?";
}

std::optional<Example> parse_example(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const auto& [id, text] : kExamples)
        if (text == lower) return id;
    return std::nullopt;
}

std::pair<std::size_t, std::size_t> example_dimensions(Example id) {
    switch (id) {
        case Example::ex1a: return {120, 10};
        case Example::ex1b: return {120, 150};
        case Example::ex2: return {120, 150};
        case Example::ex3: return {300, 150};
        case Example::ex4: return {300, 150};
        case Example::calibrated: return {376, 57};
    }
    return {0, 0};
}

ExampleSetup example_setup(Example id, std::size_t n, std::size_t p) {
    require(id != Example::calibrated, ErrorCode::config,
            "the calibrated example needs a data file; use pool_setup");
    auto [dn, dp] = example_dimensions(id);
    ExampleSetup s;
    s.id = id;
    s.n = n ? n : dn;
    s.p = p ? p : dp;
    auto ar1 = [](std::size_t rows, std::size_t cols, Rng& rng) {
        return gen_gaussian_ar1(rows, cols, 0.5, rng);
    };
    switch (id) {
        case Example::ex1a:
        case Example::ex1b:
            s.model = OutcomeModel::linear(s.p);
            s.true_set = SelectedSet{0, 1, 4};
            s.generate = ar1;
            break;
        case Example::ex2:
            s.model = OutcomeModel::mixed_discrete(s.p);
            s.true_set = SelectedSet{0, 1, 4, s.p - 4};
            s.generate = [](std::size_t rows, std::size_t cols, Rng& rng) {
                return gen_mixed(rows, cols, rng);
            };
            break;
        case Example::ex3:
            s.model = OutcomeModel::additive_nonlinear();
            s.true_set = SelectedSet{0, 1, 2, 3};
            s.generate = ar1;
            break;
        case Example::ex4:
            s.model = OutcomeModel::quadratic_phi();
            s.true_set = SelectedSet{0, 1};
            s.generate = ar1;
            break;
        case Example::calibrated:
            break;
    }
    s.model.validate(s.p);
    return s;
}

ExampleSetup pool_setup(Matrix pool, OutcomeModel model, SelectedSet true_set, std::size_t n) {
    const auto rows = static_cast<std::size_t>(pool.rows());
    const auto cols = static_cast<std::size_t>(pool.cols());
    require(rows >= 2, ErrorCode::config, "covariate pool needs at least two rows");
    require(n <= rows, ErrorCode::config,
            "trial size n = " + std::to_string(n) + " exceeds the " + std::to_string(rows) +
                " pool rows");
    model.validate(cols);
    true_set.check_range(cols);
    ExampleSetup s;
    s.id = Example::calibrated;
    s.n = n ? n : rows;
    s.p = cols;
    s.model = std::move(model);
    s.true_set = std::move(true_set);
    s.generate = [pool = std::move(pool)](std::size_t m, std::size_t, Rng& rng) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(pool.rows()));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
        rng.shuffle(order.begin(), order.end());
        Matrix X(static_cast<Eigen::Index>(m), pool.cols());
        for (std::size_t i = 0; i < m; ++i) X.row(static_cast<Eigen::Index>(i)) = pool.row(order[i]);
        return X;
    };
    return s;
}

}  // namespace arcs::simulate
