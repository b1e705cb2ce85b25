#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arcs/balance.hpp"
#include "arcs/engine.hpp"
#include "arcs/numerics.hpp"
#include "arcs/rng.hpp"
#include "arcs/selected_set.hpp"

namespace arcs::simulate {

//---------------------------------------------------------------------------//
// Covariate generators
//---------------------------------------------------------------------------//

/// n rows from N(0, Sigma) with Sigma_ij = corr^|i-j|.
Matrix gen_gaussian_ar1(std::size_t n, std::size_t p, double corr, Rng& rng);

/// First p-4 columns as gen_gaussian_ar1; the last four are the indicators
/// of (Z1, Z2) = (1,1), (1,0), (0,1), (0,0) with Z1, Z2 ~ Bernoulli(0.5).
Matrix gen_mixed(std::size_t n, std::size_t p, Rng& rng, double corr = 0.5);

//---------------------------------------------------------------------------//
// Outcome models
//---------------------------------------------------------------------------//

enum class OutcomeKind { linear, mixed_discrete, additive_nonlinear, quadratic_phi, calibrated };

/// coef * x[a] * x[b]; a == b is a square.
struct ProductTerm {
    std::size_t a = 0;
    std::size_t b = 0;
    double coef = 0.0;
};

struct OutcomeModel {
    OutcomeKind kind = OutcomeKind::linear;
    Vector beta;  // linear and calibrated kinds
    std::vector<ProductTerm> terms;  // calibrated quadratic form
    double mu0 = 0.0;
    double mu1 = 1.0;
    double noise_sd = 1.0;

    static OutcomeModel linear(std::size_t p);          // beta = (3, 1.5, 0, 0, 2, 0...)
    static OutcomeModel mixed_discrete(std::size_t p);  // adds beta_{p-4} = 1
    static OutcomeModel additive_nonlinear();
    static OutcomeModel quadratic_phi();

    double signal(const Vector& x) const;
    double mean(const Vector& x, int arm) const { return (arm == 1 ? mu1 : mu0) + signal(x); }

    /// Throws ErrorCode::config when inconsistent with p covariates.
    void validate(std::size_t p) const;
};

double f1(double x);
double f2(double x);
double f3(double x);
double f4(double x);

/// mu(arm) + signal(x) + noise_sd * N(0, 1).
double outcome(const OutcomeModel& model, const Vector& x, int arm, Rng& rng);

/// Difference in means of a completed trial.
double tau_hat(const engine::TrialState& trial);

//---------------------------------------------------------------------------//
// Examples
//---------------------------------------------------------------------------//

enum class Example { ex1a, ex1b, ex2, ex3, ex4, calibrated };

std::string_view example_name(Example e);
std::optional<Example> parse_example(std::string_view name);

using CovariateGenerator = std::function<Matrix(std::size_t n, std::size_t p, Rng& rng)>;

struct ExampleSetup {
    Example id = Example::ex1a;
    std::size_t n = 120;
    std::size_t p = 10;
    OutcomeModel model;
    SelectedSet true_set;
    CovariateGenerator generate;
};

/// Default (n, p) for an example.
std::pair<std::size_t, std::size_t> example_dimensions(Example id);

/// Synthetic examples. n and p of 0 pick the example defaults.
ExampleSetup example_setup(Example id, std::size_t n = 0, std::size_t p = 0);

/// Pseudo trial over a fixed covariate pool: each replication draws a random
/// arrival order of n pool rows.
ExampleSetup pool_setup(Matrix pool, OutcomeModel model, SelectedSet true_set,
                        std::size_t n = 0);

//---------------------------------------------------------------------------//
// Replication
//---------------------------------------------------------------------------//

struct RepRecord {
    std::size_t rep = 0;
    bool ok = false;
    std::string error;
    balance::RunMetrics metrics;
    std::size_t rr_draws = 0;
};

struct ReplicationSummary {
    engine::Method method = engine::Method::cr;
    Example example = Example::ex1a;
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t N = 0;
    std::size_t reps = 0;
    std::size_t failures = 0;
    double imb_m = 0.0;
    double dncm = 0.0;
    double dnc = 0.0;
    double imb_phi = 0.0;
    double tau_mean = 0.0;
    double tau_sd_scaled = 0.0;  // sqrt(n) * sd(tau_hat)
    double wall_mean = 0.0;
    bool has_selection = false;
    std::vector<double> tpr_by_batch;
    std::vector<double> fpr_by_batch;
    double final_tpr = 0.0;
    double final_fpr = 0.0;
};

struct ReplicationResult {
    ReplicationSummary summary;
    std::vector<RepRecord> records;  // rep order
};

/// Test hook: called before each replication; throwing marks the rep failed.
using FaultInjector = std::function<void(std::size_t rep)>;

/// Runs reps trials on stream(seed, rep). Covariates, noise, design draws and
/// selection draws use separate sub-streams, so different methods see the
/// same patients and noise for the same (seed, rep). Aggregation is by rep
/// index and independent of `workers`. More than 1% failed replications
/// raise ErrorCode::simulation.
ReplicationResult replicate(const engine::TrialConfig& config, const ExampleSetup& setup,
                            std::size_t reps, std::uint64_t seed, std::size_t workers = 1,
                            const FaultInjector& fault = {});

ReplicationSummary summarize(const engine::TrialConfig& config, const ExampleSetup& setup,
                             const std::vector<RepRecord>& records);

/// One replication, for callers that need the full trial state.
struct TrialRun {
    Matrix covariates;
    engine::TrialState state;
    balance::RunMetrics metrics;
};
TrialRun run_replication(const engine::TrialConfig& config, const ExampleSetup& setup,
                         std::uint64_t seed, std::size_t rep);

//---------------------------------------------------------------------------//
// CSV
//---------------------------------------------------------------------------//

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;  // NaN marks a missing cell

    /// Column index; throws ErrorCode::calibration naming the column.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);

inline constexpr std::string_view kPerRepHeader = "rep,method,example,n,p,batch_size,metric,value";
inline constexpr std::string_view kTrajectoryHeader = "rep,method,batch,tpr,fpr";
inline constexpr std::string_view kSummaryHeader =
    "method,example,n,p,batch_size,reps,failures,imb_m,dncm,dnc,imb_phi,tau_mean,"
    "tau_sd_scaled,final_tpr,final_fpr";

/// Long-format rows, one per (rep, metric), without the header.
void write_per_rep(std::ostream& out, const ReplicationResult& result);
/// One row per (rep, batch) for selection methods, without the header.
void write_trajectory(std::ostream& out, const ReplicationResult& result);
/// One summary row without the header.
void write_summary_row(std::ostream& out, const ReplicationSummary& s);

/// Shortest round-trippable text for a double.
std::string format_double(double v);

//---------------------------------------------------------------------------//
// Calibrated pseudo trial
//---------------------------------------------------------------------------//

enum class CalibrationForm { linear, quadratic };

std::optional<CalibrationForm> parse_form(std::string_view name);

struct Calibration {
    OutcomeModel model;  // beta indexed by pool column
    std::vector<std::string> pool_columns;
    Matrix pool;  // covariate rows, pool_columns order
    SelectedSet true_set;  // model covariates within the pool
    std::vector<std::string> term_names;
    Vector coefficients;  // OLS estimates, term_names order
    bool has_arm = false;
};

/// Ordinary least squares of the requested form with arm indicators. The
/// pool is every column other than the outcome and the arm column. The
/// quadratic form adds squares of non-binary covariates and all pairwise
/// interactions. Without an arm column the fitted intercept is used for
/// mu0 and mu1 = mu0 + 1.
Calibration calibrate_pseudo_trial(const CsvTable& data, const std::string& outcome_column,
                                   const std::vector<std::string>& covariate_columns,
                                   CalibrationForm form,
                                   const std::string& arm_column = "arm");

}  // namespace arcs::simulate
