#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "arcs/error.hpp"
#include "arcs/simulate.hpp"
#include "testkit.hpp"

using namespace arcs;
using namespace arcs::simulate;

namespace {

Matrix empirical_cov(const Matrix& X) {
    Matrix C = X.rowwise() - X.colwise().mean();
    return C.transpose() * C / static_cast<double>(X.rows() - 1);
}

std::size_t count_fields(const std::string& line) {
    return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

engine::TrialConfig config_for(engine::Method m, const ExampleSetup& setup) {
    engine::TrialConfig c;
    c.method = m;
    c.n = setup.n;
    c.p = setup.p;
    return c;
}

CsvTable table(std::vector<std::string> header, const Matrix& values) {
    CsvTable t;
    t.header = std::move(header);
    t.values = values;
    return t;
}

ErrorCode code_of(auto&& fn, std::string* what = nullptr) {
    try {
        fn();
    } catch (const Error& e) {
        if (what) *what = e.what();
        return e.code();
    }
    FAIL("expected an arcs::Error");
    return ErrorCode::contract;
}

}  // namespace

TEST_CASE("gaussian generator moments") {
    auto rng = testkit::test_rng(40);
    Matrix one = gen_gaussian_ar1(100000, 1, 0.5, rng);
    CHECK(std::abs(empirical_cov(one)(0, 0) - 1.0) <= 0.02);

    Matrix indep = gen_gaussian_ar1(100000, 4, 0.0, rng);
    Matrix S = empirical_cov(indep);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j) CHECK(std::abs(S(i, j) / std::sqrt(S(i, i) * S(j, j))) <= 0.02);

    Matrix ar = gen_gaussian_ar1(100000, 5, 0.5, rng);
    Matrix A = empirical_cov(ar);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) CHECK(std::abs(A(i, j) - std::pow(0.5, std::abs(i - j))) <= 0.02);
}

TEST_CASE("generators are reproducible") {
    Rng a(5, 1, 1), b(5, 1, 1);
    CHECK(gen_gaussian_ar1(50, 6, 0.5, a) == gen_gaussian_ar1(50, 6, 0.5, b));
    CHECK(gen_mixed(50, 9, a) == gen_mixed(50, 9, b));
}

TEST_CASE("mixed generator indicators") {
    auto rng = testkit::test_rng(41);
    const Eigen::Index n = 100000;
    Matrix X = gen_mixed(n, 9, rng);
    Matrix cells = X.rightCols(4);
    for (Eigen::Index i = 0; i < n; ++i) REQUIRE(cells.row(i).sum() == 1.0);
    CHECK(((cells.array() == 0.0) || (cells.array() == 1.0)).all());
    Vector freq = cells.colwise().mean().transpose();
    for (int c = 0; c < 4; ++c) CHECK(std::abs(freq(c) - 0.25) <= 0.01);
    // Cells: (1,1), (1,0), (0,1), (0,0). Z1 and Z2 are independent.
    CHECK(std::abs(freq(0) + freq(1) - 0.5) <= 0.01);
    Matrix cont = empirical_cov(X.leftCols(5));
    CHECK(std::abs(cont(0, 1) - 0.5) <= 0.02);
}

TEST_CASE("example models") {
    auto s1 = example_setup(Example::ex1a);
    CHECK(s1.n == 120);
    CHECK(s1.p == 10);
    CHECK(s1.true_set == SelectedSet{0, 1, 4});
    CHECK(s1.model.beta(0) == 3.0);
    CHECK(s1.model.beta(1) == 1.5);
    CHECK(s1.model.beta(4) == 2.0);
    CHECK(s1.model.beta.sum() == 6.5);

    auto s2 = example_setup(Example::ex2);
    CHECK(s2.true_set.size() == 4);
    CHECK(s2.model.beta(static_cast<Eigen::Index>(s2.p - 4)) == 1.0);
    CHECK(example_setup(Example::ex1b).p == 150);
    CHECK(example_setup(Example::ex3).n == 300);
    for (auto e : {Example::ex1a, Example::ex1b, Example::ex2, Example::ex3, Example::ex4})
        CHECK(parse_example(example_name(e)) == e);
}

TEST_CASE("outcome values") {
    auto lin = OutcomeModel::linear(10);
    Vector zero = Vector::Zero(10);
    CHECK(lin.mean(zero, 0) == 0.0);
    CHECK(lin.mean(zero, 1) == 1.0);

    auto add = OutcomeModel::additive_nonlinear();
    const double want = 0.0 - 1.0 / 3.0 - 0.5 + std::exp(-1.0);
    CHECK(add.signal(Vector::Zero(6)) == doctest::Approx(want).epsilon(1e-14));
    CHECK(add.signal(Vector::Zero(6)) == doctest::Approx(-0.4654).epsilon(1e-4));
    CHECK(f1(0.3) == doctest::Approx(-2.0 * std::sin(0.6)));
    CHECK(f2(2.0) == doctest::Approx(4.0 - 1.0 / 3.0));
    CHECK(f3(2.0) == doctest::Approx(1.5));
    CHECK(f4(1.0) == doctest::Approx(2.0 * std::exp(-1.0) - 1.0));

    auto quad = OutcomeModel::quadratic_phi();
    Vector x = Vector::Zero(5);
    x(0) = 1.0;
    CHECK(quad.signal(x) == 6.0);

    Rng rng(3, 3, 2);
    double sum = 0, sq = 0;
    for (int i = 0; i < 20000; ++i) {
        double e = outcome(lin, zero, 1, rng) - 1.0;
        sum += e;
        sq += e * e;
    }
    CHECK(std::abs(sum / 20000) < 0.03);
    CHECK(std::abs(sq / 20000 - 1.0) < 0.04);
}

TEST_CASE("tau_hat") {
    engine::TrialState st(4, 1);
    st.assignments = {1, 1, 0, 0};
    st.outcomes << 3, 5, 1, 1;
    CHECK(tau_hat(st) == 3.0);
    st.outcomes.setConstant(2.0);
    CHECK(tau_hat(st) == 0.0);
    st.assignments = {1, 1, 1, 1};
    CHECK_THROWS_AS(tau_hat(st), Error);
}

TEST_CASE("a single replication summarizes to itself") {
    auto setup = example_setup(Example::ex1a, 60, 10);
    auto config = config_for(engine::Method::arcs_cov, setup);
    auto result = replicate(config, setup, 1, 42);
    const auto& m = result.records.at(0).metrics;
    CHECK(result.summary.reps == 1);
    CHECK(result.summary.tau_sd_scaled == 0.0);
    CHECK(result.summary.imb_m == m.imb_m);
    CHECK(result.summary.dncm == m.dncm);
    CHECK(result.summary.tau_mean == m.tau_hat);
    CHECK(result.summary.final_tpr == m.tpr.back());
    auto direct = run_replication(config, setup, 42, 0);
    CHECK(direct.metrics.imb_phi == m.imb_phi);
}

TEST_CASE("replication output does not depend on the worker count") {
    auto setup = example_setup(Example::ex1a, 60, 10);
    for (auto m : {engine::Method::cr, engine::Method::arcs_m, engine::Method::arcs_cov}) {
        auto config = config_for(m, setup);
        auto one = replicate(config, setup, 24, 42, 1);
        auto eight = replicate(config, setup, 24, 42, 8);
        std::ostringstream a, b;
        write_per_rep(a, one);
        write_trajectory(a, one);
        write_summary_row(a, one.summary);
        write_per_rep(b, eight);
        write_trajectory(b, eight);
        write_summary_row(b, eight.summary);
        CHECK(a.str() == b.str());
        CHECK(one.summary.tau_sd_scaled == eight.summary.tau_sd_scaled);
    }
}

TEST_CASE("a failed replication is isolated") {
    auto setup = example_setup(Example::ex1a, 60, 10);
    auto config = config_for(engine::Method::arcs_cov, setup);
    auto clean = replicate(config, setup, 200, 42, 4);
    auto poisoned = replicate(config, setup, 200, 42, 4, [](std::size_t rep) {
        if (rep == 17) throw std::runtime_error("injected");
    });
    CHECK(poisoned.summary.failures == 1);
    CHECK_FALSE(poisoned.records[17].ok);
    CHECK(poisoned.records[17].error.find("injected") != std::string::npos);
    for (std::size_t r = 0; r < 200; ++r)
        if (r != 17) CHECK(poisoned.records[r].metrics.imb_phi == clean.records[r].metrics.imb_phi);

    auto without = clean.records;
    without[17].ok = false;
    without[17].error = "injected";
    auto expected = summarize(config, setup, without);
    CHECK(poisoned.summary.imb_phi == expected.imb_phi);
    CHECK(poisoned.summary.tau_sd_scaled == expected.tau_sd_scaled);
    CHECK(poisoned.summary.final_fpr == expected.final_fpr);
}

TEST_CASE("too many failures abort the study") {
    auto setup = example_setup(Example::ex1a, 60, 10);
    auto config = config_for(engine::Method::cr, setup);
    CHECK(code_of([&] {
              replicate(config, setup, 100, 42, 2, [](std::size_t rep) {
                  if (rep < 2) throw std::runtime_error("injected");
              });
          }) == ErrorCode::simulation);
}

TEST_CASE("csv writers follow the documented schemas") {
    auto setup = example_setup(Example::ex1a, 60, 10);
    auto result = replicate(config_for(engine::Method::arcs_cov, setup), setup, 3, 42);
    std::ostringstream per_rep, traj, summary;
    write_per_rep(per_rep, result);
    write_trajectory(traj, result);
    write_summary_row(summary, result.summary);

    auto rows = lines_of(per_rep.str());
    CHECK(rows.size() == 3 * 7);
    for (const auto& line : rows) CHECK(count_fields(line) == count_fields(std::string(kPerRepHeader)));
    CHECK(rows[0].rfind("0,ARCS-COV,1a,60,10,10,imb_m,", 0) == 0);

    auto traj_rows = lines_of(traj.str());
    CHECK(traj_rows.size() == 3 * 4);
    for (const auto& line : traj_rows) CHECK(count_fields(line) == 5);

    auto sum_rows = lines_of(summary.str());
    REQUIRE(sum_rows.size() == 1);
    CHECK(count_fields(sum_rows[0]) == count_fields(std::string(kSummaryHeader)));

    // Summary text reads back to the same numbers.
    std::map<std::string, std::string> field;
    std::stringstream names{std::string(kSummaryHeader)}, cells{sum_rows[0]};
    for (std::string name, cell; std::getline(names, name, ',') && std::getline(cells, cell, ',');)
        field[name] = cell;
    CHECK(field["method"] == "ARCS-COV");
    CHECK(std::stod(field["imb_phi"]) == result.summary.imb_phi);
    CHECK(std::stod(field["tau_sd_scaled"]) == result.summary.tau_sd_scaled);
    CHECK(std::stoul(field["reps"]) == 3);

    auto cr = replicate(config_for(engine::Method::cr, setup), setup, 2, 42);
    std::ostringstream none, cr_sum;
    write_trajectory(none, cr);
    CHECK(none.str().empty());
    write_summary_row(cr_sum, cr.summary);
    CHECK(cr_sum.str().substr(cr_sum.str().size() - 3) == ",,\n");
}

TEST_CASE("csv round trip") {
    auto rng = testkit::test_rng(42);
    Matrix v = testkit::gaussian(20, 4, rng);
    v(0, 0) = 1e-300;
    v(1, 1) = -123456789.125;
    v(2, 2) = std::numeric_limits<double>::quiet_NaN();
    auto t = table({"a", "b", "c", "d"}, v);
    std::stringstream io;
    write_csv(io, t);
    auto back = read_csv(io);
    CHECK(back.header == t.header);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            if (std::isnan(v(i, j)))
                CHECK(std::isnan(back.values(i, j)));
            else
                CHECK(std::memcmp(&v(i, j), &back.values(i, j), sizeof(double)) == 0);
        }
}

TEST_CASE("csv reader errors") {
    std::istringstream ragged("a,b\n1,2\n3\n");
    std::string what;
    CHECK(code_of([&] { read_csv(ragged); }, &what) == ErrorCode::io);
    CHECK(what.find("line 3") != std::string::npos);
    std::istringstream bad("a,b\n1,x\n");
    CHECK(code_of([&] { read_csv(bad); }, &what) == ErrorCode::io);
    CHECK(what.find("'b'") != std::string::npos);
    std::istringstream missing("a,b\n1,NA\n");
    CHECK(std::isnan(read_csv(missing).values(0, 1)));
    CHECK(code_of([] { read_csv_file("/nonexistent/file.csv"); }) == ErrorCode::io);
}

TEST_CASE("calibration recovers an exact linear model") {
    auto rng = testkit::test_rng(43);
    const Eigen::Index n = 80;
    Matrix v(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
        double t = rng.bernoulli(0.5), a = rng.normal(), b = rng.bernoulli(0.3), c = rng.normal();
        v.row(i) << 2.0 * (1 - t) + 3.5 * t + 0.7 * a - 1.2 * b, t, a, b, c;
    }
    auto cal = calibrate_pseudo_trial(table({"y", "arm", "a", "b", "c"}, v), "y", {"a", "b"},
                                      CalibrationForm::linear);
    CHECK(cal.pool_columns == std::vector<std::string>{"a", "b", "c"});
    CHECK(cal.true_set == SelectedSet{0, 1});
    CHECK(std::abs(cal.model.mu0 - 2.0) < 1e-8);
    CHECK(std::abs(cal.model.mu1 - 3.5) < 1e-8);
    CHECK(std::abs(cal.model.beta(0) - 0.7) < 1e-8);
    CHECK(std::abs(cal.model.beta(1) + 1.2) < 1e-8);
    CHECK(cal.model.beta(2) == 0.0);
    CHECK(cal.model.noise_sd == 1.0);
    CHECK(cal.has_arm);

    auto no_arm = calibrate_pseudo_trial(table({"y", "a", "b", "c"}, v(Eigen::all, std::vector<int>{0, 2, 3, 4})),
                                         "y", {"a", "b"}, CalibrationForm::linear);
    CHECK_FALSE(no_arm.has_arm);
    CHECK(no_arm.model.mu1 == no_arm.model.mu0 + 1.0);
}

TEST_CASE("quadratic calibration matches the normal equations") {
    auto rng = testkit::test_rng(44);
    const Eigen::Index n = 120;
    Matrix v(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        double t = rng.bernoulli(0.5), a = rng.normal(), b = rng.bernoulli(0.5);
        v.row(i) << 1.0 + 0.5 * t + 0.8 * a - 0.6 * b + 0.3 * a * a - 0.4 * a * b, t, a, b;
    }
    auto cal = calibrate_pseudo_trial(table({"y", "arm", "a", "b"}, v), "y", {"a", "b"},
                                      CalibrationForm::quadratic);
    CHECK(cal.term_names == std::vector<std::string>{"arm1", "arm0", "a", "b", "a^2", "a:b"});

    Matrix D(n, 6);
    for (Eigen::Index i = 0; i < n; ++i) {
        double t = v(i, 1), a = v(i, 2), b = v(i, 3);
        D.row(i) << t, 1 - t, a, b, a * a, a * b;
    }
    Vector normal = (D.transpose() * D).ldlt().solve(D.transpose() * v.col(0));
    CHECK((cal.coefficients - normal).cwiseAbs().maxCoeff() < 1e-8);
    Vector truth(6);
    truth << 1.5, 1.0, 0.8, -0.6, 0.3, -0.4;
    CHECK((cal.coefficients - truth).cwiseAbs().maxCoeff() < 1e-8);

    Vector x(2);
    x << 0.5, 1.0;
    CHECK(cal.model.signal(x) == doctest::Approx(0.8 * 0.5 - 0.6 + 0.3 * 0.25 - 0.4 * 0.5));
}

TEST_CASE("calibration errors name the offending columns") {
    Matrix v = Matrix::Random(30, 4);
    v.col(1) = (v.col(1).array() > 0).cast<double>();
    std::string what;
    CHECK(code_of([&] {
              calibrate_pseudo_trial(table({"y", "arm", "a", "b"}, v), "y", {"a", "zz"},
                                     CalibrationForm::linear);
          }, &what) == ErrorCode::calibration);
    CHECK(what.find("zz") != std::string::npos);

    CHECK(code_of([&] {
              calibrate_pseudo_trial(table({"y", "arm", "a", "b"}, v), "FinalHAMD", {"a"},
                                     CalibrationForm::linear);
          }, &what) == ErrorCode::calibration);
    CHECK(what.find("FinalHAMD") != std::string::npos);

    Matrix dup = v;
    dup.col(3) = 2.0 * dup.col(2);
    CHECK(code_of([&] {
              calibrate_pseudo_trial(table({"y", "arm", "a", "b"}, dup), "y", {"a", "b"},
                                     CalibrationForm::linear);
          }, &what) == ErrorCode::calibration);
    CHECK(what.find("collinear") != std::string::npos);

    Matrix gap = v;
    gap(4, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK(code_of([&] {
              calibrate_pseudo_trial(table({"y", "arm", "a", "b"}, gap), "y", {"a"},
                                     CalibrationForm::linear);
          }, &what) == ErrorCode::calibration);
    CHECK(what.find("'a'") != std::string::npos);
}

TEST_CASE("pool setup draws rows of the pool") {
    Matrix pool(6, 2);
    pool << 1, 10, 2, 20, 3, 30, 4, 40, 5, 50, 6, 60;
    OutcomeModel model;
    model.kind = OutcomeKind::calibrated;
    model.beta = Vector::Zero(2);
    auto setup = pool_setup(pool, model, {0}, 4);
    CHECK(setup.n == 4);
    CHECK(setup.p == 2);
    Rng rng(1, 1, 1);
    Matrix X = setup.generate(4, 2, rng);
    std::set<double> seen;
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(X(i, 1) == 10.0 * X(i, 0));
        seen.insert(X(i, 0));
    }
    CHECK(seen.size() == 4);
}
