// Monte Carlo properties on seeded studies.

#include <doctest.h>

#include <cmath>
#include <thread>

#include "arcs/simulate.hpp"

using namespace arcs;
using namespace arcs::simulate;

namespace {

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

ReplicationResult study(Example ex, engine::Method m, std::size_t reps) {
    auto setup = example_setup(ex);
    engine::TrialConfig c;
    c.method = m;
    c.n = setup.n;
    c.p = setup.p;
    return replicate(c, setup, reps, 42, workers());
}

double sd_of(const std::vector<RepRecord>& records, double balance::RunMetrics::*field) {
    double mean = 0, sq = 0;
    for (const auto& r : records) mean += r.metrics.*field;
    mean /= static_cast<double>(records.size());
    for (const auto& r : records) sq += std::pow(r.metrics.*field - mean, 2);
    return std::sqrt(sq / static_cast<double>(records.size() - 1));
}

}  // namespace

TEST_CASE("complete randomization is unbiased and matches the chi-square mean") {
    auto cr = study(Example::ex1a, engine::Method::cr, 2000);
    const double se_tau = sd_of(cr.records, &balance::RunMetrics::tau_hat) / std::sqrt(2000.0);
    CHECK(std::abs(cr.summary.tau_mean - 1.0) <= 3.0 * se_tau);

    // (n/2) d' S^-1 d is about 2 chi2_s with s = 3.
    const double se_imb = sd_of(cr.records, &balance::RunMetrics::imb_m) / std::sqrt(2000.0);
    CHECK(std::abs(cr.summary.imb_m - 6.0) <= 2.0 * se_imb);
}

TEST_CASE("ARCS-COV improves on complete randomization") {
    for (auto ex : {Example::ex1a, Example::ex2}) {
        auto arcs = study(ex, engine::Method::arcs_cov, 200);
        auto cr = study(ex, engine::Method::cr, 200);
        CHECK(arcs.summary.imb_phi < cr.summary.imb_phi);
        CHECK(arcs.summary.dncm < cr.summary.dncm);
    }
}

TEST_CASE("ARCS-COV estimates the treatment effect without bias") {
    auto arcs = study(Example::ex1a, engine::Method::arcs_cov, 500);
    CHECK(std::abs(arcs.summary.tau_mean - 1.0) <= 0.05);
    CHECK(arcs.summary.failures == 0);
}
