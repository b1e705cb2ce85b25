#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arcs/engine.hpp"
#include "arcs/simulate.hpp"

namespace arcs::cli {

/// One experiment: an example, a list of methods and the shared design
/// knobs. Unset optional fields take the example's defaults.
struct ExperimentSpec {
    simulate::Example example = simulate::Example::ex1a;
    std::vector<engine::Method> methods;
    std::optional<std::size_t> n;
    std::optional<std::size_t> p;
    std::size_t N0 = 30;
    std::optional<std::size_t> N;
    double rho = 0.85;
    std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::size_t cv_folds = 5;
    std::string cv_rule = "lambda-min";
    double rr_accept_prob = 0.001;
    std::size_t reps = 200;
    std::uint64_t seed = 42;
    std::size_t threads = 0;  // 0: available parallelism
    std::string out = "out";
    std::string form = "linear";
    std::string data;
    std::string outcome = "FinalHAMD";
    std::vector<std::string> covariates{"RACE", "HAMD24"};
    std::string arm_column = "arm";

    bool operator==(const ExperimentSpec&) const = default;
};

/// Flat JSON keys accepted by a config file; flags mirror them.
const std::vector<std::string>& config_keys();

/// Throws ErrorCode::config naming the key path on unknown keys or
/// ill-typed values. Missing keys keep their current value in `base`.
ExperimentSpec merge_json(ExperimentSpec base, const nlohmann::json& j,
                          const std::string& origin = "config");

ExperimentSpec parse_config_file(const std::string& path);

/// Every key, with example defaults filled in.
nlohmann::json to_json(const ExperimentSpec& spec);

/// Fills example defaults (n, p, N) so that equal experiments compare equal.
ExperimentSpec normalize(ExperimentSpec spec);

/// Checks the spec and every derived TrialConfig; throws ErrorCode::config.
void validate(const ExperimentSpec& spec);

std::size_t default_batch_size(simulate::Example example);

/// The trial configuration used for `method` under this spec. n and p of
/// 0 take the spec's (normalized) values.
engine::TrialConfig trial_config(const ExperimentSpec& spec, engine::Method method,
                                 std::size_t n = 0, std::size_t p = 0);

std::vector<engine::Method> parse_method_list(const std::string& text);
std::array<double, 3> parse_weights(const std::string& text);

struct StudyResult {
    std::vector<simulate::ReplicationResult> runs;  // spec.methods order
    std::optional<simulate::Calibration> calibration;
};

/// Builds the example (calibrating from spec.data for the calibrated
/// example) and runs every method.
StudyResult run_study(const ExperimentSpec& spec);

/// Writes per_rep.csv, trajectory.csv and summary.csv under spec.out.
void write_outputs(const ExperimentSpec& spec, const StudyResult& study);

/// Aligned console table, two decimals.
void print_table(std::ostream& out, const StudyResult& study);

void print_calibration(std::ostream& out, const simulate::Calibration& cal);

}  // namespace arcs::cli
