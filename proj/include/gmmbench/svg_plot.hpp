#pragma once

#include "gmmbench/harness.hpp"

#include <string>
#include <vector>

namespace gmmbench {

// Deterministic SVG line plot of a sweep result: one line per estimator plus
// the bound (black, dashed), mean markers with +-std whiskers across MC runs.
// For the SNR-driven experiments the x axis is the per-point SNR in dB,
// otherwise the raw sweep value.
void emit_plot(const SweepResult& result, const std::string& path);
void emit_plot(const std::vector<NmseRecord>& records, const std::string& experiment,
               const std::string& path, AverageDomain domain = AverageDomain::Db);

}  // namespace gmmbench
