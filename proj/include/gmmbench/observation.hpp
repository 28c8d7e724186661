#pragma once

#include "gmmbench/gmm_model.hpp"

#include <cstdint>
#include <utility>

namespace gmmbench {

// One Monte-Carlo realization of the linear observation system x = H t + n.
struct ObservationSystem {
    Mat H;  // P x Q
    int P = 0;
    int Q = 0;
    std::uint64_t seed = 0;
    double entry_stddev = 0.0;  // stddev used when drawing H
};

// Everything needed to regenerate a dataset bit for bit.
struct GenerationRecord {
    GmmPrior prior;
    NoiseModel noise;
    std::uint64_t system_seed = 0;
    double system_entry_stddev = 0.0;
    std::uint64_t sample_seed = 0;
    int n = 0;
    std::uint64_t model_fingerprint = 0;  // fingerprint of (prior, noise, system)
};

struct Dataset {
    Mat observations;  // P x n
    Mat targets;       // Q x n
    GenerationRecord record;

    int size() const { return static_cast<int>(observations.cols()); }
};

// FNV-1a fingerprint of the exact (prior, noise, system) triple, including
// the realized entries of H.
std::uint64_t model_fingerprint(const GmmPrior& prior, const NoiseModel& noise,
                                const ObservationSystem& system);

// H with i.i.d. N(0, entry_stddev^2) entries, filled row by row from the
// seed. The default stddev 1/sqrt(P) keeps E||Ht||^2 close to ||t||^2
// independent of P.
ObservationSystem draw_system(int P, int Q, std::uint64_t seed);
ObservationSystem draw_system(int P, int Q, std::uint64_t seed, double entry_stddev);

// x = H t + n. Throws NumericalError on dimension mismatch.
Vec observe(const ObservationSystem& system, const Vec& t, const Vec& n);

Dataset generate_dataset(const GmmPrior& prior, const NoiseModel& noise,
                         const ObservationSystem& system, int n, std::uint64_t seed);

// Rebuilds the dataset from its generation record; bit-identical to the
// original.
Dataset regenerate_dataset(const GenerationRecord& record);

// Seeded shuffle, then train gets round(n * train_fraction) samples and test
// the rest. Throws if either side would be empty.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed);

}  // namespace gmmbench
