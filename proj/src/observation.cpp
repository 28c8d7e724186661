#include "gmmbench/observation.hpp"

#include "gmmbench/errors.hpp"
#include "gmmbench/random.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace gmmbench {

std::uint64_t model_fingerprint(const GmmPrior& prior, const NoiseModel& noise,
                                const ObservationSystem& system) {
    Fnv1a64 h;
    h.u64(static_cast<std::uint64_t>(prior.M));
    for (int m = 0; m < prior.M; ++m) h.f64(prior.alphas(m));
    for (const Vec& mu : prior.unit_means)
        for (int q = 0; q < mu.size(); ++q) h.f64(mu(q));
    h.f64(prior.scale_a);
    for (const Mat& C : prior.covariances)
        for (int c = 0; c < C.cols(); ++c)
            for (int r = 0; r < C.rows(); ++r) h.f64(C(r, c));
    for (int p = 0; p < noise.mean.size(); ++p) h.f64(noise.mean(p));
    h.f64(noise.b);
    h.u64(static_cast<std::uint64_t>(noise.P));
    h.u64(static_cast<std::uint64_t>(system.P));
    h.u64(static_cast<std::uint64_t>(system.Q));
    for (int c = 0; c < system.H.cols(); ++c)
        for (int r = 0; r < system.H.rows(); ++r) h.f64(system.H(r, c));
    return h.value();
}

ObservationSystem draw_system(int P, int Q, std::uint64_t seed) {
    return draw_system(P, Q, seed, 1.0 / std::sqrt(static_cast<double>(P)));
}

ObservationSystem draw_system(int P, int Q, std::uint64_t seed, double entry_stddev) {
    if (P < 1 || Q < 1) throw InvalidConfigError("draw_system: P and Q must be >= 1");
    if (!(entry_stddev > 0.0)) throw InvalidConfigError("draw_system: entry stddev must be positive");

    ObservationSystem sys;
    sys.P = P;
    sys.Q = Q;
    sys.seed = seed;
    sys.entry_stddev = entry_stddev;
    sys.H.resize(P, Q);
    RandomStream rng(seed);
    for (int r = 0; r < P; ++r)
        for (int c = 0; c < Q; ++c) sys.H(r, c) = entry_stddev * rng.gaussian();
    return sys;
}

Vec observe(const ObservationSystem& system, const Vec& t, const Vec& n) {
    if (t.size() != system.Q)
        throw NumericalError("observe: target dimension " + std::to_string(t.size()) +
                             " does not match Q=" + std::to_string(system.Q));
    if (n.size() != system.P)
        throw NumericalError("observe: noise dimension " + std::to_string(n.size()) +
                             " does not match P=" + std::to_string(system.P));
    return system.H * t + n;
}

Dataset generate_dataset(const GmmPrior& prior, const NoiseModel& noise,
                         const ObservationSystem& system, int n, std::uint64_t seed) {
    if (prior.Q() != system.Q)
        throw InvalidConfigError("generate_dataset: prior dimension does not match system Q");
    if (noise.P != system.P)
        throw InvalidConfigError("generate_dataset: noise dimension does not match system P");

    Dataset ds;
    ds.record.prior = prior;
    ds.record.noise = noise;
    ds.record.system_seed = system.seed;
    ds.record.system_entry_stddev = system.entry_stddev;
    ds.record.sample_seed = seed;
    ds.record.n = n;
    ds.record.model_fingerprint = model_fingerprint(prior, noise, system);

    // One stream drives both draws so the pairing is part of the seed contract:
    // targets first, then noise.
    const std::uint64_t t_seed = derive_seed(seed, 0, 0, "targets");
    const std::uint64_t n_seed = derive_seed(seed, 0, 0, "noise");
    PriorSample ts = sample_prior(prior, n, t_seed);
    Mat ns = sample_noise(noise, n, n_seed);

    ds.targets = std::move(ts.samples);
    ds.observations = system.H * ds.targets + ns;
    return ds;
}

Dataset regenerate_dataset(const GenerationRecord& record) {
    ObservationSystem system = draw_system(record.noise.P, record.prior.Q(), record.system_seed,
                                           record.system_entry_stddev);
    return generate_dataset(record.prior, record.noise, system, record.n, record.sample_seed);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidConfigError("split: train_fraction must lie in (0, 1)");
    const int n = dataset.size();
    const int n_train = static_cast<int>(std::llround(n * train_fraction));
    const int n_test = n - n_train;
    if (n_train < 1 || n_test < 1)
        throw InvalidConfigError("split: " + std::to_string(n) + " samples at fraction " +
                                 std::to_string(train_fraction) + " leaves an empty side");

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    RandomStream rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[i], idx[j]);
    }

    const int P = static_cast<int>(dataset.observations.rows());
    const int Q = static_cast<int>(dataset.targets.rows());
    Dataset train, test;
    train.record = dataset.record;
    test.record = dataset.record;
    train.observations.resize(P, n_train);
    train.targets.resize(Q, n_train);
    test.observations.resize(P, n_test);
    test.targets.resize(Q, n_test);
    for (int i = 0; i < n_train; ++i) {
        train.observations.col(i) = dataset.observations.col(idx[i]);
        train.targets.col(i) = dataset.targets.col(idx[i]);
    }
    for (int i = 0; i < n_test; ++i) {
        test.observations.col(i) = dataset.observations.col(idx[n_train + i]);
        test.targets.col(i) = dataset.targets.col(idx[n_train + i]);
    }
    return {std::move(train), std::move(test)};
}

}  // namespace gmmbench
