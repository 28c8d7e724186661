#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace gmmbench {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Gaussian mixture prior over the target signal t in R^Q:
//   p(t) = sum_m alphas[m] * N(t; scale_a * unit_means[m], covariances[m])
// Component means live on a sphere of radius scale_a; unit_means hold the
// unit-norm directions. Immutable after construction.
struct GmmPrior {
    int M = 0;
    Vec alphas;
    std::vector<Vec> unit_means;
    double scale_a = 0.0;
    std::vector<Mat> covariances;

    int Q() const { return unit_means.empty() ? 0 : static_cast<int>(unit_means[0].size()); }
};

// Observation noise n ~ N(mean, (b/P) * I_P). The trace of the covariance is
// b by construction, so b is the total noise power.
struct NoiseModel {
    Vec mean;
    double b = 0.0;
    int P = 0;

    double per_coordinate_variance() const { return b / static_cast<double>(P); }
};

enum class MeanLayout { Ring, RandomSphere };

// Builds a prior with the standard experiment defaults: equal weights,
// identity covariances, means from build_means.
GmmPrior make_prior(int Q, int M, MeanLayout layout, double scale_a, std::uint64_t mean_seed = 0);

// Validates the invariants (weights sum to 1, unit-norm means, symmetric
// Cholesky-factorizable covariances); throws InvalidConfigError on violation.
void validate_prior(const GmmPrior& prior, double tol = 1e-12);

NoiseModel make_noise(int P, double b);

// Unit-norm component mean directions. Ring places them equally spaced on the
// unit circle in the first two coordinates (angle 2*pi*m/M), so they sum to
// zero for M >= 2; RandomSphere normalizes i.i.d. standard-normal draws.
std::vector<Vec> build_means(int Q, int M, MeanLayout layout, std::uint64_t seed);

struct PriorSample {
    Mat samples;              // Q x n, one sample per column
    std::vector<int> labels;  // component index per sample
};

PriorSample sample_prior(const GmmPrior& prior, int n, std::uint64_t seed);

// P x n matrix of noise draws.
Mat sample_noise(const NoiseModel& noise, int n, std::uint64_t seed);

// Analytic E||t - E(t)||^2:
//   sum_m alpha_m Tr[C_m] + a^2 (sum_m alpha_m ||mu_m||^2 - ||sum_m alpha_m mu_m||^2)
// which reduces to Q + a^2 (1 - Tr[(sum mu)(sum mu)^T] / M^2) for the
// equal-weight identity-covariance case.
double signal_power(const GmmPrior& prior);

// 10 log10(signal_power / b).
double snr_db(const GmmPrior& prior, const NoiseModel& noise);

// E(t) = a * sum_m alpha_m mu_m.
Vec prior_mean(const GmmPrior& prior);

// Inverts the SNR formula: the scale a such that snr_db(prior(a), noise(b))
// equals target_db, for the given mean geometry. Throws if no nonnegative
// solution exists.
double scale_for_snr_db(double target_db, const GmmPrior& reference_prior, double b);

}  // namespace gmmbench
