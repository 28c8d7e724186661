#pragma once

#include "gmmbench/gmm_model.hpp"

#include <string>
#include <vector>

namespace gmmbench {

// Reported NMSE values are floored here so emitted files stay finite.
constexpr double kNmseFloorDb = -100.0;

// One benchmark measurement: an estimator's NMSE on one test set of one
// Monte-Carlo run at one sweep point. Carries everything the CSV rows need.
struct NmseRecord {
    std::string estimator;
    std::string sweep_name;
    double sweep_value = 0.0;
    double snr_db = 0.0;
    int mc_run = 0;
    int n_train = 0;
    int n_test = 0;
    double nmse_db = 0.0;
    double signal_power = 0.0;  // analytic denominator used
};

// 10 log10( mean_i ||t_i - that_i||^2 / signal_power ), floored at -100 dB.
// Columns of both matrices are samples.
double nmse_db(const Mat& predictions, const Mat& targets, double signal_power);

enum class AverageDomain { Db, Linear };

struct AggregateRow {
    std::string estimator;
    double sweep_value = 0.0;
    double snr_db = 0.0;  // mean across the group's records
    double mean_nmse_db = 0.0;
    double std_nmse_db = 0.0;  // sample std (n-1); 0 for singleton groups
    int count = 0;
};

// Per-(estimator, sweep value) mean and sample standard deviation across MC
// runs, sorted by (estimator, sweep value). Db averages the dB values
// directly; Linear averages in the linear domain and converts back.
std::vector<AggregateRow> aggregate(const std::vector<NmseRecord>& records,
                                    AverageDomain domain = AverageDomain::Db);

}  // namespace gmmbench
