#include "arcs/engine.hpp"

#include <algorithm>
#include <array>
#include <boost/math/distributions/chi_squared.hpp>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "arcs/error.hpp"

namespace arcs::engine {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kNames{{
    {Method::cr, "CR"},
    {Method::rr, "RR"},
    {Method::arm, "ARM"},
    {Method::cov, "COV"},
    {Method::arcs_m, "ARCS-M"},
    {Method::arcs_cov, "ARCS-COV"},
    {Method::arcs_m_add, "ARCS-M-add"},
    {Method::arcs_cov_add, "ARCS-COV-add"},
}};

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto ca = std::tolower(static_cast<unsigned char>(a[i]));
        auto cb = std::tolower(static_cast<unsigned char>(b[i]));
        if (ca != cb) return false;
    }
    return true;
}

std::string num(std::size_t v) { return std::to_string(v); }

}  // namespace

std::string_view method_name(Method m) {
    for (const auto& [method, name] : kNames)
        if (method == m) return name;
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    for (const auto& [method, text] : kNames)
        if (iequals(text, name)) return method;
    return std::nullopt;
}

std::vector<Method> all_methods() {
    std::vector<Method> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
}

bool is_arcs(Method m) {
    return m == Method::arcs_m || m == Method::arcs_cov || m == Method::arcs_m_add ||
           m == Method::arcs_cov_add;
}

bool is_pairwise(Method m) {
    return m == Method::arm || m == Method::arcs_m || m == Method::arcs_m_add;
}

bool is_m_family(Method m) { return is_pairwise(m) || m == Method::rr; }

selection::Mode TrialConfig::selection_mode() const {
    return (method == Method::arcs_m_add || method == Method::arcs_cov_add)
               ? selection::Mode::additive
               : selection::Mode::lasso;
}

std::size_t TrialConfig::batches() const {
    if (N == 0 || N0 > n) return 0;
    return (n - N0) / N;
}

void TrialConfig::validate() const {
    const std::string name(method_name(method));
    require(n >= 2, ErrorCode::config, "n must be at least 2 (got " + num(n) + ")");
    require(p >= 1, ErrorCode::config, "p must be at least 1");
    require(rho > 0.5 && rho < 1.0, ErrorCode::config,
            "rho must lie strictly between 0.5 and 1 (got " + std::to_string(rho) + ")");
    require(pinv_tol > 0 && pinv_tol < 1, ErrorCode::config, "pinv_tol must lie in (0, 1)");
    phi.validate();
    require(selection.cv.folds >= 2, ErrorCode::config, "cv_folds must be at least 2");
    require(selection.cv.grid_size >= 1, ErrorCode::config, "cv grid size must be positive");
    if (fixed_selection) fixed_selection->check_range(p);

    if (is_arcs(method)) {
        require(N0 % 2 == 0, ErrorCode::config, "N0 must be even (got " + num(N0) + ")");
        require(N >= 1, ErrorCode::config, "N must be positive");
        require(N0 <= n, ErrorCode::config,
                "N0 (" + num(N0) + ") must not exceed n (" + num(n) + ")");
        require((n - N0) % N == 0, ErrorCode::config,
                "n - N0 must be divisible by N: n = " + num(n) + ", N0 = " + num(N0) +
                    ", N = " + num(N));
    }
    if (is_pairwise(method)) {
        require(n % 2 == 0, ErrorCode::config,
                name + " assigns in pairs and needs even n (got " + num(n) + ")");
        if (is_arcs(method))
            require(N % 2 == 0, ErrorCode::config,
                    name + " assigns in pairs and needs even N (got " + num(N) + ")");
    }
    if (method == Method::rr) {
        require(n % 2 == 0, ErrorCode::config, "RR needs even n (got " + num(n) + ")");
        require(p < n, ErrorCode::config,
                "RR refused for p = " + num(p) + " >= n = " + num(n) +
                    ": it may not be feasible to implement RR when n < p, since the "
                    "Mahalanobis distance is the same for every assignment");
        require(rr_accept_prob > 0 && rr_accept_prob < 1, ErrorCode::config,
                "rr_accept_prob must lie in (0, 1)");
        require(rr_max_draws >= 1, ErrorCode::config, "rr_max_draws must be positive");
    }
}

TrialState::TrialState(std::size_t n, std::size_t p)
    : covariates(Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p))),
      assignments(n, kUnassigned),
      outcomes(Vector::Zero(static_cast<Eigen::Index>(n))) {}

double coin_probability(double delta, double rho, bool tie) {
    if (tie || delta == 0.0) return 0.5;
    return delta < 0 ? rho : 1.0 - rho;
}

int biased_coin(double delta, double rho, UniformSource& rng, bool tie) {
    require(std::isfinite(delta), ErrorCode::contract, "biased_coin: delta is not finite");
    require(rho > 0.5 && rho < 1.0, ErrorCode::contract, "biased_coin: rho outside (0.5, 1)");
    const double u = rng.uniform();
    if (tie || delta == 0.0) return u < 0.5 ? 1 : 0;
    const int preferred = delta < 0 ? 1 : 0;
    return u < rho ? preferred : 1 - preferred;
}

double rr_threshold(std::size_t p, double prob) {
    require(p >= 1, ErrorCode::contract, "rr_threshold: p must be positive");
    require(prob > 0 && prob < 1, ErrorCode::contract, "rr_threshold: prob outside (0, 1)");
    boost::math::chi_squared dist(static_cast<double>(p));
    return boost::math::quantile(dist, prob);
}

namespace {

double rr_scale(std::span<const int> assignments) {
    std::size_t n1 = 0;
    for (int t : assignments) n1 += t == 1;
    const std::size_t n = assignments.size();
    return static_cast<double>(n1) * static_cast<double>(n - n1) / static_cast<double>(n);
}

}  // namespace

double rr_statistic(const Matrix& X, std::span<const int> assignments, double tol) {
    balance::MahalanobisScorer scorer(X, tol);
    return rr_scale(assignments) * scorer.quadratic(assignments);
}

//---------------------------------------------------------------------------//
// Trial mechanics
//---------------------------------------------------------------------------//

namespace {

class Trial {
   public:
    Trial(const TrialConfig& config, TrialInputs& in)
        : config_(config), in_(in), state_(config.n, config.p) {}

    TrialState& state() { return state_; }

    void reveal(std::size_t i) {
        Vector x = in_.covariates(i);
        require(x.size() == static_cast<Eigen::Index>(config_.p), ErrorCode::contract,
                "covariate row " + std::to_string(i) + " has length " +
                    std::to_string(x.size()) + ", expected " + std::to_string(config_.p));
        state_.covariates.row(static_cast<Eigen::Index>(i)) = x.transpose();
        state_.revealed = std::max(state_.revealed, i + 1);
    }

    void assign(std::size_t i, int arm) {
        state_.assignments[i] = arm;
        Vector x = state_.covariates.row(static_cast<Eigen::Index>(i)).transpose();
        state_.outcomes(static_cast<Eigen::Index>(i)) = in_.outcome(i, x, arm);
        ++state_.assigned;
        (arm == 1 ? state_.n1 : state_.n0)++;
    }

    // Initial patients in pairs with a fair orientation per pair.
    void initial_pairs() {
        for (std::size_t i = 0; i + 1 < config_.N0; i += 2) {
            reveal(i);
            reveal(i + 1);
            const int first = in_.design.uniform() < 0.5 ? 1 : 0;
            assign(i, first);
            assign(i + 1, 1 - first);
        }
    }

    // Returns true when the selected set changed.
    bool refit() {
        SelectedSet next;
        bool stale = false;
        if (config_.fixed_selection) {
            next = *config_.fixed_selection;
        } else {
            const auto k = static_cast<Eigen::Index>(state_.assigned);
            selection::SelectionOptions opts = config_.selection;
            opts.mode = config_.selection_mode();
            try {
                auto result = selection::arcs_select(
                    state_.covariates.topRows(k),
                    std::span<const int>(state_.assignments.data(), state_.assigned),
                    state_.outcomes.head(k), opts, in_.selection, state_.selected);
                next = std::move(result.selected);
                stale = result.stale;
            } catch (const Error&) {
                next = state_.selected;
                stale = true;
            }
        }
        const bool changed = !(next == state_.selected) || state_.selection_history.empty();
        state_.selected = std::move(next);
        state_.selection_history.push_back(state_.selected);
        state_.stale_history.push_back(stale);
        return changed;
    }

    const TrialConfig& config() const { return config_; }
    TrialInputs& in() { return in_; }

   private:
    const TrialConfig& config_;
    TrialInputs& in_;
    TrialState state_;
};

}  // namespace

TrialState run_arcs(const TrialConfig& config, TrialInputs in) {
    config.validate();
    Trial trial(config, in);
    auto& st = trial.state();
    st.imbalance = balance::ImbalanceState(config.phi, SelectedSet{});

    trial.initial_pairs();
    trial.refit();
    st.imbalance.rebuild(st.covariates, st.assignments, st.assigned, st.selected);

    const std::size_t B = config.batches();
    for (std::size_t b = 1; b <= B; ++b) {
        for (std::size_t j = 0; j < config.N; ++j) {
            const std::size_t i = config.N0 + (b - 1) * config.N + j;
            trial.reveal(i);
            Vector phi = st.imbalance.phi_of(st.covariates, static_cast<Eigen::Index>(i));
            const double delta = balance::imb_delta(st.imbalance, phi);
            // Imb(1) + Imb(0) = 2 ||Lambda||^2 + 2 ||phi||^2.
            const double sum =
                2.0 * st.imbalance.lambda_vec().squaredNorm() + 2.0 * phi.squaredNorm();
            const bool tie = std::abs(delta) <= 1e-12 * (1.0 + sum);
            const int arm = biased_coin(delta, config.rho, in.design, tie);
            trial.assign(i, arm);
            st.imbalance.add(arm, phi);
        }
        st.batch_index = b;
        if (trial.refit())
            st.imbalance.rebuild(st.covariates, st.assignments, st.assigned, st.selected);
    }
    return std::move(st);
}

TrialState run_arcs_m(const TrialConfig& config, TrialInputs in) {
    config.validate();
    require(config.N0 % 2 == 0 && config.N % 2 == 0, ErrorCode::config,
            "pairwise assignment needs even N0 and N");
    Trial trial(config, in);
    auto& st = trial.state();

    trial.initial_pairs();
    trial.refit();

    std::vector<int> trial_arms;
    const std::size_t B = config.batches();
    for (std::size_t b = 1; b <= B; ++b) {
        for (std::size_t j = 0; j < config.N; j += 2) {
            const std::size_t i = config.N0 + (b - 1) * config.N + j;
            trial.reveal(i);
            trial.reveal(i + 1);
            const std::size_t k = i + 2;
            double delta = 0.0;
            bool tie = true;
            if (!st.selected.empty()) {
                balance::MahalanobisScorer scorer(
                    balance::restrict(st.covariates, static_cast<Eigen::Index>(k), st.selected),
                    config.pinv_tol);
                trial_arms.assign(st.assignments.begin(), st.assignments.begin() + static_cast<std::ptrdiff_t>(k));
                trial_arms[i] = 1;
                trial_arms[i + 1] = 0;
                const double imb1 = scorer.imbalance(trial_arms);
                trial_arms[i] = 0;
                trial_arms[i + 1] = 1;
                const double imb0 = scorer.imbalance(trial_arms);
                delta = imb1 - imb0;
                tie = balance::is_tie(imb1, imb0);
            }
            const int arm = biased_coin(delta, config.rho, in.design, tie);
            trial.assign(i, arm);
            trial.assign(i + 1, 1 - arm);
        }
        st.batch_index = b;
        trial.refit();
    }
    return std::move(st);
}

TrialState run_cr(const TrialConfig& config, TrialInputs in) {
    config.validate();
    Trial trial(config, in);
    for (std::size_t i = 0; i < config.n; ++i) {
        trial.reveal(i);
        trial.assign(i, in.design.uniform() < 0.5 ? 1 : 0);
    }
    return std::move(trial.state());
}

TrialState run_rr(const TrialConfig& config, TrialInputs in) {
    config.validate();
    Trial trial(config, in);
    auto& st = trial.state();
    for (std::size_t i = 0; i < config.n; ++i) trial.reveal(i);

    const double threshold = rr_threshold(config.p, config.rr_accept_prob);
    balance::MahalanobisScorer scorer(st.covariates, config.pinv_tol);
    const double scale = static_cast<double>(config.n) / 4.0;  // n1 n0 / n with n1 = n0

    std::vector<std::size_t> perm(config.n);
    std::vector<int> arms(config.n);
    for (std::size_t draw = 1; draw <= config.rr_max_draws; ++draw) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t m = config.n; m > 1; --m) {
            auto j = static_cast<std::size_t>(in.design.uniform() * static_cast<double>(m));
            std::swap(perm[m - 1], perm[std::min(j, m - 1)]);
        }
        for (std::size_t r = 0; r < config.n; ++r) arms[perm[r]] = r < config.n / 2 ? 1 : 0;
        if (scale * scorer.quadratic(arms) < threshold) {
            st.rr_draws = draw;
            for (std::size_t i = 0; i < config.n; ++i) trial.assign(i, arms[i]);
            return std::move(st);
        }
    }
    fail(ErrorCode::acceptance_failure,
         "RR found no assignment below the threshold " + std::to_string(threshold) + " in " +
             std::to_string(config.rr_max_draws) + " draws");
}

TrialState run_arm(const TrialConfig& config, TrialInputs in) {
    TrialConfig c = config;
    c.N0 = 0;
    c.N = c.n;
    c.fixed_selection = SelectedSet::all(c.p);
    return run_arcs_m(c, in);
}

TrialState run_cov(const TrialConfig& config, TrialInputs in) {
    TrialConfig c = config;
    c.N0 = 0;
    c.N = c.n;
    c.fixed_selection = SelectedSet::all(c.p);
    return run_arcs(c, in);
}

TrialState run_trial(const TrialConfig& config, TrialInputs in) {
    switch (config.method) {
        case Method::cr: return run_cr(config, in);
        case Method::rr: return run_rr(config, in);
        case Method::arm: return run_arm(config, in);
        case Method::cov: return run_cov(config, in);
        case Method::arcs_m:
        case Method::arcs_m_add: return run_arcs_m(config, in);
        case Method::arcs_cov:
        case Method::arcs_cov_add: return run_arcs(config, in);
    }
    fail(ErrorCode::contract, "run_trial: unknown method");
}

}  // namespace arcs::engine
