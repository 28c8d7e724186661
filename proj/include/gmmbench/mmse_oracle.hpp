#pragma once

#include "gmmbench/gmm_model.hpp"
#include "gmmbench/observation.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <vector>

namespace gmmbench {

// Per-component precomputations for the closed-form conditional mean of a
// Gaussian-mixture target observed through x = H t + n.
//
// For component m with observation-space covariance
//   S_m = H C_m H^T + C_n
// the cache holds the Cholesky factor of S_m, log|S_m|, the gain
//   G_m = C_m H^T S_m^{-1}        (Q x P)
// and the predicted observation mean
//   xbar_m = H (a mu_m) + mu_n    (R^P).
//
// The estimate is then
//   t_hat(x) = sum_m beta_m(x) (a mu_m + G_m (x - xbar_m))
// with posterior component weights beta_m computed in log space.
//
// Valid only for the exact (prior, noise, system) triple it was built from;
// the fingerprint records that triple.
struct OracleCache {
    struct Component {
        Eigen::LLT<Mat> llt_S;  // factor of S_m
        double log_det_S = 0.0;
        Mat gain;            // G_m, Q x P
        Vec predicted_mean;  // xbar_m
        Vec scaled_mean;     // a mu_m
        double log_alpha = 0.0;
    };

    std::vector<Component> components;
    int P = 0;
    int Q = 0;
    std::uint64_t fingerprint = 0;
};

// Throws NumericalError naming the offending component if any S_m fails to
// factorize.
OracleCache build_cache(const GmmPrior& prior, const NoiseModel& noise,
                        const ObservationSystem& system);

// Posterior component weights beta_m(x). Nonnegative, sum to 1; computed with
// a max-shifted log-sum-exp so extreme geometries neither overflow nor
// collapse to 0/0.
Vec responsibilities(const OracleCache& cache, const Vec& x);

// Conditional mean E(t | x).
Vec mmse_estimate(const OracleCache& cache, const Vec& x);

// Reference evaluation of the same estimator without the cache: explicit
// inverses and determinants, one component at a time. Slower and less
// robust; kept as an independent route for verification.
Vec mmse_estimate_reference(const GmmPrior& prior, const NoiseModel& noise,
                            const ObservationSystem& system, const Vec& x);

// 10 log10( mean ||t - E(t|x)||^2 / signal_power ), floored at -100 dB.
// The dataset must have been generated under the same (prior, noise, system);
// fingerprints are checked.
double oracle_nmse_db(const GmmPrior& prior, const NoiseModel& noise,
                      const ObservationSystem& system, const Dataset& test);
double oracle_nmse_db(const OracleCache& cache, const Dataset& test);

}  // namespace gmmbench
