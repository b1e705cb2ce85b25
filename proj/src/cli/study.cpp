#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "arcs/cli.hpp"
#include "arcs/error.hpp"

namespace arcs::cli {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "cannot write '" + path.string() + "'");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    require(out.good(), ErrorCode::io, "error while writing '" + path.string() + "'");
}

}  // namespace

StudyResult run_study(const ExperimentSpec& raw) {
    ExperimentSpec spec = normalize(raw);
    validate(spec);

    StudyResult study;
    simulate::ExampleSetup setup;
    if (spec.example == simulate::Example::calibrated) {
        auto form = *simulate::parse_form(spec.form);
        auto data = simulate::read_csv_file(spec.data);
        study.calibration = simulate::calibrate_pseudo_trial(data, spec.outcome, spec.covariates,
                                                             form, spec.arm_column);
        const auto& cal = *study.calibration;
        if (spec.p)
            require(*spec.p == cal.pool_columns.size(), ErrorCode::config,
                    "p = " + std::to_string(*spec.p) + " does not match the " +
                        std::to_string(cal.pool_columns.size()) + " covariate columns in " +
                        spec.data);
        setup = simulate::pool_setup(cal.pool, cal.model, cal.true_set, spec.n.value_or(0));
        spdlog::info("calibrated {} form on {}: pool {} x {}", spec.form, spec.data,
                     cal.pool.rows(), cal.pool.cols());
    } else {
        setup = simulate::example_setup(spec.example, *spec.n, *spec.p);
    }

    std::size_t workers = spec.threads;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

    for (auto method : spec.methods) {
        auto config = trial_config(spec, method, setup.n, setup.p);
        config.validate();
        spdlog::info("example {} method {}: n = {}, p = {}, N = {}, reps = {}",
                     simulate::example_name(spec.example), engine::method_name(method), config.n,
                     config.p, config.N, spec.reps);
        auto result = simulate::replicate(config, setup, spec.reps, spec.seed, workers);
        spdlog::debug("{}: {} failed replications", engine::method_name(method),
                      result.summary.failures);
        study.runs.push_back(std::move(result));
    }
    return study;
}

void write_outputs(const ExperimentSpec& spec, const StudyResult& study) {
    namespace fs = std::filesystem;
    const fs::path dir(spec.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec && fs::is_directory(dir), ErrorCode::io,
            "cannot create output directory '" + dir.string() + "'");

    const auto per_rep_path = dir / "per_rep.csv";
    auto per_rep = open_output(per_rep_path);
    per_rep << simulate::kPerRepHeader << '\n';
    for (const auto& run : study.runs) simulate::write_per_rep(per_rep, run);
    finish(per_rep, per_rep_path);

    const auto traj_path = dir / "trajectory.csv";
    auto traj = open_output(traj_path);
    traj << simulate::kTrajectoryHeader << '\n';
    for (const auto& run : study.runs) simulate::write_trajectory(traj, run);
    finish(traj, traj_path);

    const auto summary_path = dir / "summary.csv";
    auto summary = open_output(summary_path);
    summary << simulate::kSummaryHeader << '\n';
    for (const auto& run : study.runs) simulate::write_summary_row(summary, run.summary);
    finish(summary, summary_path);
    spdlog::info("wrote {}, {} and {}", per_rep_path.string(), traj_path.string(),
                 summary_path.string());
}

void print_table(std::ostream& out, const StudyResult& study) {
    std::vector<std::vector<std::string>> rows{{"method", "n", "p", "N", "reps", "Imb_M", "DNCM",
                                                "DNC", "Imb_phi", "tau", "sd", "TPR", "FPR",
                                                "time(s)"}};
    auto num = [](double v) { return fmt::format("{:.2f}", v); };
    for (const auto& run : study.runs) {
        const auto& s = run.summary;
        auto rate = [&](double v) { return s.has_selection ? num(v) : std::string("-"); };
        rows.push_back({std::string(engine::method_name(s.method)), std::to_string(s.n),
                        std::to_string(s.p), std::to_string(s.N), std::to_string(s.reps),
                        num(s.imb_m), num(s.dncm), num(s.dnc), num(s.imb_phi), num(s.tau_mean),
                        num(s.tau_sd_scaled), rate(s.final_tpr), rate(s.final_fpr),
                        num(s.wall_mean)});
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    for (const auto& row : rows) {
        std::string line = fmt::format("{:<{}}", row[0], width[0]);
        for (std::size_t c = 1; c < row.size(); ++c) line += fmt::format("  {:>{}}", row[c], width[c]);
        out << line << '\n';
    }
}

void print_calibration(std::ostream& out, const simulate::Calibration& cal) {
    out << "calibrated outcome model (least squares):\n";
    for (std::size_t k = 0; k < cal.term_names.size(); ++k)
        out << fmt::format("  {:<24}{:>12.4f}\n", cal.term_names[k],
                           cal.coefficients(static_cast<Eigen::Index>(k)));
    out << fmt::format("  mu0 = {:.4f}, mu1 = {:.4f}{}\n", cal.model.mu0, cal.model.mu1,
                       cal.has_arm ? "" : " (no arm column: mu1 = mu0 + 1)");
}

}  // namespace arcs::cli
