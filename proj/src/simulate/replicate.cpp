#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <string>
#include <thread>

#include "arcs/error.hpp"
#include "arcs/simulate.hpp"

namespace arcs::simulate {

namespace {

bool tracks_selection(const engine::TrialConfig& config) {
    return engine::is_arcs(config.method) && !config.fixed_selection;
}

}  // namespace

TrialRun run_replication(const engine::TrialConfig& config, const ExampleSetup& setup,
                         std::uint64_t seed, std::size_t rep) {
    require(config.n == setup.n && config.p == setup.p, ErrorCode::config,
            "trial dimensions (n = " + std::to_string(config.n) + ", p = " +
                std::to_string(config.p) + ") differ from the example (n = " +
                std::to_string(setup.n) + ", p = " + std::to_string(setup.p) + ")");
    Rng cov_rng = stream(seed, rep, Substream::covariates);
    Rng noise_rng = stream(seed, rep, Substream::noise);
    Rng design_rng = stream(seed, rep, Substream::design);
    Rng selection_rng = stream(seed, rep, Substream::selection);

    TrialRun run;
    run.covariates = setup.generate(config.n, config.p, cov_rng);
    Vector noise(static_cast<Eigen::Index>(config.n));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = noise_rng.normal();

    const Matrix& X = run.covariates;
    const OutcomeModel& model = setup.model;
    engine::TrialInputs inputs{
        [&X](std::size_t i) -> Vector { return X.row(static_cast<Eigen::Index>(i)).transpose(); },
        [&model, &noise](std::size_t i, const Vector& x, int arm) {
            return model.mean(x, arm) + model.noise_sd * noise(static_cast<Eigen::Index>(i));
        },
        design_rng, selection_rng};

    run.state = engine::run_trial(config, inputs);
    static const std::vector<SelectedSet> kNoHistory;
    run.metrics = balance::report_metrics(
        X, run.state.assignments, run.state.outcomes, setup.true_set, config.phi,
        tracks_selection(config) ? run.state.selection_history : kNoHistory);
    return run;
}

ReplicationSummary summarize(const engine::TrialConfig& config, const ExampleSetup& setup,
                             const std::vector<RepRecord>& records) {
    ReplicationSummary s;
    s.method = config.method;
    s.example = setup.id;
    s.n = config.n;
    s.p = config.p;
    s.N = config.N;
    s.reps = records.size();
    s.has_selection = tracks_selection(config);

    std::vector<const balance::RunMetrics*> ok;
    std::string first_error;
    for (const auto& r : records) {
        if (r.ok)
            ok.push_back(&r.metrics);
        else if (first_error.empty())
            first_error = "rep " + std::to_string(r.rep) + ": " + r.error;
    }
    s.failures = records.size() - ok.size();
    require(!records.empty(), ErrorCode::simulation, "no replications were run");
    require(static_cast<double>(s.failures) <= 0.01 * static_cast<double>(records.size()) &&
                !ok.empty(),
            ErrorCode::simulation,
            std::to_string(s.failures) + " of " + std::to_string(records.size()) +
                " replications failed (" + first_error + ")");

    const double m = static_cast<double>(ok.size());
    for (const auto* r : ok) {
        s.imb_m += r->imb_m;
        s.dncm += r->dncm;
        s.dnc += r->dnc;
        s.imb_phi += r->imb_phi;
        s.tau_mean += r->tau_hat;
        s.wall_mean += r->wall_seconds;
    }
    s.imb_m /= m;
    s.dncm /= m;
    s.dnc /= m;
    s.imb_phi /= m;
    s.tau_mean /= m;
    s.wall_mean /= m;
    if (ok.size() > 1) {
        double ss = 0;
        for (const auto* r : ok) ss += (r->tau_hat - s.tau_mean) * (r->tau_hat - s.tau_mean);
        s.tau_sd_scaled = std::sqrt(static_cast<double>(config.n)) * std::sqrt(ss / (m - 1));
    }

    if (s.has_selection) {
        std::size_t batches = ok.front()->tpr.size();
        for (const auto* r : ok) batches = std::min(batches, r->tpr.size());
        s.tpr_by_batch.assign(batches, 0.0);
        s.fpr_by_batch.assign(batches, 0.0);
        for (const auto* r : ok)
            for (std::size_t b = 0; b < batches; ++b) {
                s.tpr_by_batch[b] += r->tpr[b];
                s.fpr_by_batch[b] += r->fpr[b];
            }
        for (std::size_t b = 0; b < batches; ++b) {
            s.tpr_by_batch[b] /= m;
            s.fpr_by_batch[b] /= m;
        }
        if (batches) {
            s.final_tpr = s.tpr_by_batch.back();
            s.final_fpr = s.fpr_by_batch.back();
        }
    }
    return s;
}

ReplicationResult replicate(const engine::TrialConfig& config, const ExampleSetup& setup,
                            std::size_t reps, std::uint64_t seed, std::size_t workers,
                            const FaultInjector& fault) {
    require(reps >= 1, ErrorCode::config, "reps must be at least 1");
    config.validate();
    setup.model.validate(setup.p);

    ReplicationResult result;
    result.records.resize(reps);

    auto one = [&](std::size_t rep) {
        RepRecord& rec = result.records[rep];
        rec.rep = rep;
        const auto start = std::chrono::steady_clock::now();
        try {
            if (fault) fault(rep);
            TrialRun run = run_replication(config, setup, seed, rep);
            rec.metrics = std::move(run.metrics);
            rec.rr_draws = run.state.rr_draws;
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.metrics.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    workers = std::max<std::size_t>(1, std::min(workers, reps));
    if (workers == 1) {
        for (std::size_t rep = 0; rep < reps; ++rep) one(rep);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t rep = next++; rep < reps; rep = next++) one(rep);
            });
        for (auto& t : pool) t.join();
    }

    result.summary = summarize(config, setup, result.records);
    return result;
}

}  // namespace arcs::simulate
