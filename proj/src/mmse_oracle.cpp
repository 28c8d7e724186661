#include "gmmbench/mmse_oracle.hpp"

#include "gmmbench/errors.hpp"
#include "gmmbench/metrics.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <string>

namespace gmmbench {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
}

OracleCache build_cache(const GmmPrior& prior, const NoiseModel& noise,
                        const ObservationSystem& system) {
    validate_prior(prior);
    if (prior.Q() != system.Q)
        throw InvalidConfigError("build_cache: prior dimension does not match system Q");
    if (noise.P != system.P)
        throw InvalidConfigError("build_cache: noise dimension does not match system P");
    if (noise.b <= 0.0) throw InvalidConfigError("build_cache: noise power b must be positive");

    const int P = system.P;
    const double noise_var = noise.per_coordinate_variance();

    OracleCache cache;
    cache.P = P;
    cache.Q = system.Q;
    cache.fingerprint = model_fingerprint(prior, noise, system);
    cache.components.resize(prior.M);

    for (int m = 0; m < prior.M; ++m) {
        auto& comp = cache.components[m];
        const Mat HC = system.H * prior.covariances[m];  // P x Q
        Mat S = HC * system.H.transpose();
        S.diagonal().array() += noise_var;

        comp.llt_S.compute(S);
        if (comp.llt_S.info() != Eigen::Success)
            throw NumericalError("build_cache: S_" + std::to_string(m) +
                                 " failed Cholesky factorization (ill-conditioned model)");

        comp.log_det_S = 0.0;
        const auto& L = comp.llt_S.matrixLLT();
        for (int i = 0; i < P; ++i) comp.log_det_S += 2.0 * std::log(L(i, i));

        // G_m = C_m H^T S^-1 = (S^-1 H C_m)^T since S and C_m are symmetric.
        comp.gain = comp.llt_S.solve(HC).transpose();
        comp.scaled_mean = prior.scale_a * prior.unit_means[m];
        comp.predicted_mean = system.H * comp.scaled_mean + noise.mean;
        comp.log_alpha = std::log(prior.alphas(m));  // -inf for alpha = 0 is fine downstream
    }
    return cache;
}

// Log of the (unnormalized) posterior weight of component m at x, up to the
// shared constant -(P/2) log 2*pi which cancels in the normalization.
static double log_component_score(const OracleCache::Component& comp, const Vec& residual) {
    const double maha = residual.dot(comp.llt_S.solve(residual));
    return comp.log_alpha - 0.5 * (comp.log_det_S + maha);
}

Vec responsibilities(const OracleCache& cache, const Vec& x) {
    if (x.size() != cache.P)
        throw NumericalError("responsibilities: x has dimension " + std::to_string(x.size()) +
                             ", expected " + std::to_string(cache.P));
    if (!x.allFinite()) throw NumericalError("responsibilities: non-finite observation");

    const int M = static_cast<int>(cache.components.size());
    Vec log_scores(M);
    for (int m = 0; m < M; ++m)
        log_scores(m) = log_component_score(cache.components[m], x - cache.components[m].predicted_mean);

    // Max-shifted softmax: invariant to any constant added to all log-scores.
    const double shift = log_scores.maxCoeff();
    Vec beta = (log_scores.array() - shift).exp();
    beta /= beta.sum();
    return beta;
}

Vec mmse_estimate(const OracleCache& cache, const Vec& x) {
    const Vec beta = responsibilities(cache, x);
    Vec estimate = Vec::Zero(cache.Q);
    for (int m = 0; m < static_cast<int>(cache.components.size()); ++m) {
        const auto& comp = cache.components[m];
        if (beta(m) == 0.0) continue;
        estimate += beta(m) * (comp.scaled_mean + comp.gain * (x - comp.predicted_mean));
    }
    return estimate;
}

Vec mmse_estimate_reference(const GmmPrior& prior, const NoiseModel& noise,
                            const ObservationSystem& system, const Vec& x) {
    const int P = system.P;
    const double noise_var = noise.per_coordinate_variance();

    Vec weights(prior.M);
    Mat cond_means(system.Q, prior.M);
    for (int m = 0; m < prior.M; ++m) {
        Mat S = system.H * prior.covariances[m] * system.H.transpose();
        S.diagonal().array() += noise_var;
        const Mat S_inv = S.inverse();
        const double det_S = S.determinant();

        const Vec mean_m = prior.scale_a * prior.unit_means[m];
        const Vec residual = x - (system.H * mean_m + noise.mean);
        const double density = std::exp(-0.5 * residual.dot(S_inv * residual)) /
                               (std::pow(2.0 * 3.141592653589793238462643383279502884, 0.5 * P) *
                                std::sqrt(det_S));
        weights(m) = prior.alphas(m) * density;
        cond_means.col(m) =
            mean_m + prior.covariances[m] * system.H.transpose() * (S_inv * residual);
    }
    return cond_means * (weights / weights.sum());
}

double oracle_nmse_db(const GmmPrior& prior, const NoiseModel& noise,
                      const ObservationSystem& system, const Dataset& test) {
    OracleCache cache = build_cache(prior, noise, system);
    if (cache.fingerprint != test.record.model_fingerprint)
        throw NumericalError("oracle_nmse_db: dataset was generated under a different model "
                             "(fingerprint mismatch)");
    return oracle_nmse_db(cache, test);
}

double oracle_nmse_db(const OracleCache& cache, const Dataset& test) {
    const int n = test.size();
    if (n == 0) throw NumericalError("oracle_nmse_db: empty test set");

    Mat estimates(cache.Q, n);
    for (int i = 0; i < n; ++i) estimates.col(i) = mmse_estimate(cache, test.observations.col(i));
    return nmse_db(estimates, test.targets, signal_power(test.record.prior));
}

}  // namespace gmmbench
