#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "arcs/checks.hpp"
#include "arcs/cli.hpp"
#include "arcs/error.hpp"

namespace {

using nlohmann::json;

struct Flags {
    std::string config;
    std::string example;
    std::string methods;
    std::optional<std::size_t> n, p, N0, N, reps, threads;
    std::optional<double> rho;
    std::string weights;
    std::optional<std::uint64_t> seed;
    std::string out, form, data, outcome, covariates, cv_rule;
};

void add_experiment_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file (flat keys)");
    cmd->add_option("--example", f.example, "1a, 1b, 2, 3, 4 or calibrated");
    cmd->add_option("--methods", f.methods, "comma-separated, e.g. cr,rr,arm,arcs-m");
    cmd->add_option("--n", f.n, "number of patients");
    cmd->add_option("--p", f.p, "number of covariates");
    cmd->add_option("--N0", f.N0, "initial batch size");
    cmd->add_option("--N", f.N, "batch size");
    cmd->add_option("--rho", f.rho, "biased-coin probability");
    cmd->add_option("--weights", f.weights, "w0,w1,w2 for the covariance-family imbalance");
    cmd->add_option("--reps", f.reps, "replications");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--form", f.form, "calibration form: linear or quadratic");
    cmd->add_option("--data", f.data, "CSV for the calibrated example");
    cmd->add_option("--outcome", f.outcome, "outcome column of --data");
    cmd->add_option("--covariates", f.covariates, "model covariates of --data, comma-separated");
    cmd->add_option("--cv-rule", f.cv_rule, "lambda-min or one-se");
}

json flags_json(const Flags& f) {
    json j = json::object();
    auto str = [&](const char* key, const std::string& v) {
        if (!v.empty()) j[key] = v;
    };
    auto num = [&](const char* key, const auto& v) {
        if (v) j[key] = *v;
    };
    str("example", f.example);
    str("methods", f.methods);
    num("n", f.n);
    num("p", f.p);
    num("N0", f.N0);
    num("N", f.N);
    num("rho", f.rho);
    str("weights", f.weights);
    num("reps", f.reps);
    num("seed", f.seed);
    num("threads", f.threads);
    str("out", f.out);
    str("form", f.form);
    str("data", f.data);
    str("outcome", f.outcome);
    str("covariates", f.covariates);
    str("cv_rule", f.cv_rule);
    return j;
}

arcs::cli::ExperimentSpec resolve(const Flags& f) {
    arcs::cli::ExperimentSpec spec;
    if (!f.config.empty()) spec = arcs::cli::parse_config_file(f.config);
    spec = arcs::cli::merge_json(spec, flags_json(f), "command-line flags");
    spec = arcs::cli::normalize(spec);
    arcs::cli::validate(spec);
    return spec;
}

void save_config(const arcs::cli::ExperimentSpec& spec) {
    std::ofstream out(std::string(spec.out) + "/config.json");
    arcs::require(out.good(), arcs::ErrorCode::io, "cannot write " + spec.out + "/config.json");
    out << arcs::cli::to_json(spec).dump(2) << '\n';
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("arcs");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("ARCS_LOG");
    std::string level = env ? env : "error";
    if (level == "debug")
        spdlog::set_level(spdlog::level::debug);
    else if (level == "info")
        spdlog::set_level(spdlog::level::info);
    else
        spdlog::set_level(spdlog::level::err);
}

int run_experiment(const Flags& f, bool table, bool calibrate) {
    Flags flags = f;
    if (calibrate) {
        arcs::require(flags.example.empty() || flags.example == "calibrated",
                      arcs::ErrorCode::config, "calibrate always uses the calibrated example");
        flags.example = "calibrated";
    }
    auto spec = resolve(flags);
    auto study = arcs::cli::run_study(spec);
    arcs::cli::write_outputs(spec, study);
    save_config(spec);
    if (study.calibration) arcs::cli::print_calibration(std::cout, *study.calibration);
    if (table || calibrate) {
        arcs::cli::print_table(std::cout, study);
    } else {
        for (const auto& r : study.runs)
            std::cout << arcs::engine::method_name(r.summary.method) << ": " << r.summary.reps
                      << " reps, " << r.summary.failures << " failed\n";
        std::cout << "results in " << spec.out << "\n";
    }
    return 0;
}

int selftest(std::uint64_t seed) {
    auto results = arcs::checks::run_all(seed);
    std::size_t failed = 0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.value << " (limit "
                  << r.limit << "; " << r.detail << ")\n";
        if (!r.pass) ++failed;
    }
    arcs::require(failed == 0, arcs::ErrorCode::acceptance_failure,
                  std::to_string(failed) + " of " + std::to_string(results.size()) +
                      " property suites failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive randomization with covariate selection: simulation driver"};
    app.require_subcommand(1);
    Flags run_flags, table_flags, calibrate_flags;
    std::uint64_t selftest_seed = 42;
    auto* run = app.add_subcommand("run", "run an experiment and write CSV results");
    add_experiment_flags(run, run_flags);
    auto* table = app.add_subcommand("table", "run an experiment and print a summary table");
    add_experiment_flags(table, table_flags);
    auto* calibrate =
        app.add_subcommand("calibrate", "fit an outcome model to --data and simulate from it");
    add_experiment_flags(calibrate, calibrate_flags);
    auto* self = app.add_subcommand("selftest", "run the invariant property suites");
    self->add_option("--seed", selftest_seed, "seed for the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << arcs::to_string(arcs::ErrorCode::config) << ": " << e.what() << std::endl;
        return 2;
    }

    try {
        setup_logging();
        if (*run) return run_experiment(run_flags, false, false);
        if (*table) return run_experiment(table_flags, true, false);
        if (*calibrate) return run_experiment(calibrate_flags, true, true);
        if (*self) return selftest(selftest_seed);
    } catch (const arcs::Error& e) {
        std::cerr << arcs::to_string(e.code()) << ": " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "E_INTERNAL: " << e.what() << std::endl;
        return 1;
    }
    return 1;
}
