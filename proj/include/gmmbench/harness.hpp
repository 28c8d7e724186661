#pragma once

#include "gmmbench/estimators.hpp"
#include "gmmbench/metrics.hpp"
#include "gmmbench/mmse_oracle.hpp"
#include "gmmbench/observation.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace gmmbench {

enum class ExperimentKind { TrainSizeSweep, SnrASweep, DimensionPSweep, MismatchBSweep };

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

// Name of the oracle pseudo-estimator in result records; the second variant
// only appears in the mismatch experiment (oracle built on the training
// statistics, evaluated on the shifted test sets).
inline constexpr const char* kOracleName = "mmse_bound";
inline constexpr const char* kOracleTrainMatchedName = "mmse_bound_train_matched";

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::TrainSizeSweep;

    // base model
    int Q = 10;
    int P = 10;
    int M = 10;
    MeanLayout mean_layout = MeanLayout::Ring;
    std::uint64_t mean_seed = 0;  // used by the random_sphere layout
    double a = 3.0;
    double b = 1.0;
    double h_entry_stddev = 0.0;  // 0 = default 1/sqrt(P)

    // sampling / runs
    int n_total = 3000;
    double train_fraction = 0.7;
    int mc_runs = 10;
    std::vector<double> grid;
    std::uint64_t seed = 0;

    // estimators to benchmark, in emission order
    std::vector<EstimatorSpec> estimators;

    // mismatch experiment: estimators train at noise power train_b; if
    // train_snr_db is finite, a is re-derived so the training SNR hits it.
    double train_b = 1.0;
    double train_snr_db = std::numeric_limits<double>::quiet_NaN();

    AverageDomain average_domain = AverageDomain::Db;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir = "results";

    void validate() const;  // throws InvalidConfigError
};

struct SweepResult {
    ExperimentConfig config;  // full snapshot for reproducibility
    std::vector<NmseRecord> records;
};

SweepResult run_experiment(const ExperimentConfig& config);
SweepResult run_train_size_sweep(const ExperimentConfig& config);
SweepResult run_snr_a_sweep(const ExperimentConfig& config);
SweepResult run_dimension_p_sweep(const ExperimentConfig& config);
SweepResult run_mismatch_b_sweep(const ExperimentConfig& config);

// Checks that the oracle record of every (sweep value, mc run) group is no
// worse than any other record of the group plus slack_db. Returns one message
// per violation; empty means the bound held everywhere.
std::vector<std::string> audit_bound_dominance(const SweepResult& result, double slack_db = 0.2);

// CSV with the exact header
//   experiment,sweep_name,sweep_value,snr_db,estimator,mc_run,n_train,n_test,nmse_db
// Numbers are shortest-round-trip formatted, so identical results give
// byte-identical files and a re-read recovers the records exactly.
void emit_csv(const SweepResult& result, const std::string& path);
std::vector<NmseRecord> read_csv(const std::string& path, std::string* experiment_out = nullptr);

// Inspection dump: run_id, sample_id, x_1..x_P, t_1..t_Q.
void write_dataset_csv(const Dataset& dataset, int run_id, const std::string& path);

// Flat key = value config text; '#' starts a comment. See README for keys.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Per-experiment default sweep grids (used by the `all` subcommand and by
// configs that omit `grid`).
std::vector<double> default_grid(ExperimentKind kind);

}  // namespace gmmbench
