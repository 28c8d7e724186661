#include "gmmbench/gmm_model.hpp"

#include "gmmbench/errors.hpp"
#include "gmmbench/random.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace gmmbench {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

std::vector<Vec> build_means(int Q, int M, MeanLayout layout, std::uint64_t seed) {
    if (M < 1) throw InvalidConfigError("build_means: M must be >= 1, got " + std::to_string(M));
    if (Q < 1) throw InvalidConfigError("build_means: Q must be >= 1, got " + std::to_string(Q));

    std::vector<Vec> means;
    means.reserve(M);

    switch (layout) {
        case MeanLayout::Ring: {
            if (Q < 2)
                throw InvalidConfigError("build_means: ring layout needs Q >= 2, got Q=" +
                                         std::to_string(Q));
            for (int m = 0; m < M; ++m) {
                Vec mu = Vec::Zero(Q);
                const double angle = 2.0 * kPi * m / M;
                mu(0) = std::cos(angle);
                mu(1) = std::sin(angle);
                means.push_back(std::move(mu));
            }
            break;
        }
        case MeanLayout::RandomSphere: {
            RandomStream rng(seed);
            for (int m = 0; m < M; ++m) {
                Vec mu(Q);
                double norm_sq = 0.0;
                do {
                    for (int q = 0; q < Q; ++q) mu(q) = rng.gaussian();
                    norm_sq = mu.squaredNorm();
                } while (norm_sq == 0.0);
                means.push_back(mu / std::sqrt(norm_sq));
            }
            break;
        }
    }
    return means;
}

GmmPrior make_prior(int Q, int M, MeanLayout layout, double scale_a, std::uint64_t mean_seed) {
    GmmPrior prior;
    prior.M = M;
    prior.alphas = Vec::Constant(M, 1.0 / M);
    prior.unit_means = build_means(Q, M, layout, mean_seed);
    prior.scale_a = scale_a;
    prior.covariances.assign(M, Mat::Identity(Q, Q));
    validate_prior(prior);
    return prior;
}

void validate_prior(const GmmPrior& prior, double tol) {
    if (prior.M < 1 || prior.alphas.size() != prior.M ||
        static_cast<int>(prior.unit_means.size()) != prior.M ||
        static_cast<int>(prior.covariances.size()) != prior.M)
        throw InvalidConfigError("GmmPrior: inconsistent component counts");
    if (prior.scale_a < 0.0) throw InvalidConfigError("GmmPrior: scale_a must be nonnegative");

    const int Q = prior.Q();
    if (Q < 1) throw InvalidConfigError("GmmPrior: empty means");

    double weight_sum = 0.0;
    for (int m = 0; m < prior.M; ++m) {
        const double a_m = prior.alphas(m);
        if (a_m < 0.0) throw InvalidConfigError("GmmPrior: negative mixing proportion");
        weight_sum += a_m;
    }
    if (std::abs(weight_sum - 1.0) > tol)
        throw InvalidConfigError("GmmPrior: mixing proportions sum to " + std::to_string(weight_sum));

    for (int m = 0; m < prior.M; ++m) {
        if (prior.unit_means[m].size() != Q)
            throw InvalidConfigError("GmmPrior: mean dimension mismatch");
        if (std::abs(prior.unit_means[m].squaredNorm() - 1.0) > tol)
            throw InvalidConfigError("GmmPrior: mean " + std::to_string(m) + " is not unit-norm");
        const Mat& C = prior.covariances[m];
        if (C.rows() != Q || C.cols() != Q)
            throw InvalidConfigError("GmmPrior: covariance dimension mismatch");
        if (!(C - C.transpose()).isZero(tol))
            throw InvalidConfigError("GmmPrior: covariance " + std::to_string(m) + " not symmetric");
        Eigen::LLT<Mat> llt(C);
        if (llt.info() != Eigen::Success)
            throw InvalidConfigError("GmmPrior: covariance " + std::to_string(m) +
                                     " is not positive definite");
    }
}

NoiseModel make_noise(int P, double b) {
    if (P < 1) throw InvalidConfigError("NoiseModel: P must be >= 1");
    if (b <= 0.0) throw InvalidConfigError("NoiseModel: noise power b must be positive");
    NoiseModel noise;
    noise.mean = Vec::Zero(P);
    noise.b = b;
    noise.P = P;
    return noise;
}

PriorSample sample_prior(const GmmPrior& prior, int n, std::uint64_t seed) {
    validate_prior(prior);
    const int Q = prior.Q();

    PriorSample out;
    out.samples.resize(Q, n);
    out.labels.resize(n);
    if (n == 0) return out;

    // Cumulative weights for inverse-CDF component selection; ties resolve to
    // the lower index (first m with cum[m] >= u).
    Vec cum(prior.M);
    double run = 0.0;
    for (int m = 0; m < prior.M; ++m) {
        run += prior.alphas(m);
        cum(m) = run;
    }
    cum(prior.M - 1) = 1.0;

    std::vector<Mat> chol(prior.M);
    for (int m = 0; m < prior.M; ++m)
        chol[m] = Eigen::LLT<Mat>(prior.covariances[m]).matrixL();

    RandomStream rng(seed);
    Vec z(Q);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        int m = 0;
        while (m < prior.M - 1 && cum(m) < u) ++m;
        for (int q = 0; q < Q; ++q) z(q) = rng.gaussian();
        out.samples.col(i) = prior.scale_a * prior.unit_means[m] + chol[m] * z;
        out.labels[i] = m;
    }
    return out;
}

Mat sample_noise(const NoiseModel& noise, int n, std::uint64_t seed) {
    if (noise.b <= 0.0) throw InvalidConfigError("sample_noise: noise power b must be positive");
    Mat out(noise.P, n);
    const double sigma = std::sqrt(noise.per_coordinate_variance());
    RandomStream rng(seed);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < noise.P; ++p) out(p, i) = noise.mean(p) + sigma * rng.gaussian();
    return out;
}

double signal_power(const GmmPrior& prior) {
    double trace_term = 0.0;
    double mean_norm_term = 0.0;
    Vec weighted_mean = Vec::Zero(prior.Q());
    for (int m = 0; m < prior.M; ++m) {
        trace_term += prior.alphas(m) * prior.covariances[m].trace();
        mean_norm_term += prior.alphas(m) * prior.unit_means[m].squaredNorm();
        weighted_mean += prior.alphas(m) * prior.unit_means[m];
    }
    const double a2 = prior.scale_a * prior.scale_a;
    return trace_term + a2 * (mean_norm_term - weighted_mean.squaredNorm());
}

double snr_db(const GmmPrior& prior, const NoiseModel& noise) {
    if (noise.b <= 0.0) throw InvalidConfigError("snr_db: noise power b must be positive");
    return 10.0 * std::log10(signal_power(prior) / noise.b);
}

Vec prior_mean(const GmmPrior& prior) {
    Vec mean = Vec::Zero(prior.Q());
    for (int m = 0; m < prior.M; ++m) mean += prior.alphas(m) * prior.unit_means[m];
    return prior.scale_a * mean;
}

double scale_for_snr_db(double target_db, const GmmPrior& reference_prior, double b) {
    if (b <= 0.0) throw InvalidConfigError("scale_for_snr_db: noise power b must be positive");

    // signal_power(a) = trace_term + a^2 * spread; solve for a >= 0.
    double trace_term = 0.0;
    double spread = 0.0;
    Vec weighted_mean = Vec::Zero(reference_prior.Q());
    for (int m = 0; m < reference_prior.M; ++m) {
        trace_term += reference_prior.alphas(m) * reference_prior.covariances[m].trace();
        spread += reference_prior.alphas(m) * reference_prior.unit_means[m].squaredNorm();
        weighted_mean += reference_prior.alphas(m) * reference_prior.unit_means[m];
    }
    spread -= weighted_mean.squaredNorm();

    const double wanted_power = std::pow(10.0, target_db / 10.0) * b;
    const double a2 = (wanted_power - trace_term) / spread;
    if (!(spread > 0.0) || a2 < 0.0)
        throw InvalidConfigError("scale_for_snr_db: target SNR unreachable for this geometry");
    return std::sqrt(a2);
}

}  // namespace gmmbench
