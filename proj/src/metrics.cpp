#include "gmmbench/metrics.hpp"

#include "gmmbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gmmbench {

double nmse_db(const Mat& predictions, const Mat& targets, double signal_power) {
    if (predictions.cols() != targets.cols() || predictions.rows() != targets.rows())
        throw NumericalError("nmse_db: prediction/target shape mismatch");
    if (predictions.cols() < 1) throw NumericalError("nmse_db: empty sample set");
    if (!(signal_power > 0.0)) throw NumericalError("nmse_db: signal power must be positive");

    const double mse = (predictions - targets).squaredNorm() / predictions.cols();
    const double value = 10.0 * std::log10(mse / signal_power);
    return std::max(value, kNmseFloorDb);
}

std::vector<AggregateRow> aggregate(const std::vector<NmseRecord>& records, AverageDomain domain) {
    if (records.empty()) return {};

    std::map<std::pair<std::string, double>, std::vector<const NmseRecord*>> groups;
    for (const auto& rec : records) groups[{rec.estimator, rec.sweep_value}].push_back(&rec);

    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, members] : groups) {
        AggregateRow row;
        row.estimator = key.first;
        row.sweep_value = key.second;
        row.count = static_cast<int>(members.size());

        double snr_sum = 0.0;
        double sum = 0.0;
        for (const auto* rec : members) {
            snr_sum += rec->snr_db;
            sum += domain == AverageDomain::Db ? rec->nmse_db
                                               : std::pow(10.0, rec->nmse_db / 10.0);
        }
        const double mean = sum / row.count;
        row.snr_db = snr_sum / row.count;
        row.mean_nmse_db = domain == AverageDomain::Db ? mean : 10.0 * std::log10(mean);

        double sq = 0.0;
        for (const auto* rec : members) {
            const double v = domain == AverageDomain::Db ? rec->nmse_db
                                                         : std::pow(10.0, rec->nmse_db / 10.0);
            sq += (v - mean) * (v - mean);
        }
        if (row.count > 1) {
            const double std_raw = std::sqrt(sq / (row.count - 1));
            // In the linear domain the spread is converted to a dB-equivalent
            // half-width around the mean.
            row.std_nmse_db = domain == AverageDomain::Db
                                  ? std_raw
                                  : 10.0 * std::log10((mean + std_raw) / mean);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace gmmbench
