#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gmmbench/errors.hpp"
#include "gmmbench/metrics.hpp"
#include "gmmbench/mmse_oracle.hpp"
#include "gmmbench/random.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace gmmbench;

namespace {

ObservationSystem identity_system(int n) {
    ObservationSystem sys;
    sys.P = sys.Q = n;
    sys.H = Mat::Identity(n, n);
    return sys;
}

ObservationSystem scalar_system(double h) {
    ObservationSystem sys;
    sys.P = sys.Q = 1;
    sys.H = Mat::Constant(1, 1, h);
    return sys;
}

GmmPrior scalar_two_component(double a) {
    GmmPrior prior;
    prior.M = 2;
    prior.alphas = Vec::Constant(2, 0.5);
    prior.unit_means = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    prior.scale_a = a;
    prior.covariances = {Mat::Identity(1, 1), Mat::Identity(1, 1)};
    return prior;
}

Mat random_spd(int n, RandomStream& rng) {
    Mat A(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) A(r, c) = rng.gaussian();
    return A * A.transpose() + 0.5 * Mat::Identity(n, n);
}

// Golden regression value for the desk-scale configuration below; frozen on
// the first run after the cached and reference routes were seen to agree.
constexpr double kGoldenNmseDb = -7.027288090187;

}  // namespace

TEST_CASE("cache components: S = (1 + sigma^2) I for the identity model") {
    GmmPrior prior = make_prior(3, 1, MeanLayout::Ring, 1.0);
    const double sigma_sq = 0.25;
    const NoiseModel noise = make_noise(3, 3.0 * sigma_sq);  // per-coordinate sigma^2
    const auto cache = build_cache(prior, noise, identity_system(3));

    REQUIRE(cache.components.size() == 1);
    const Mat L = cache.components[0].llt_S.matrixL();
    CHECK((L * L.transpose() - (1.0 + sigma_sq) * Mat::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("cache holds one SPD factor per component with observation shape") {
    const GmmPrior prior = make_prior(10, 3, MeanLayout::Ring, 2.0);
    const NoiseModel noise = make_noise(5, 1.0);
    const auto cache = build_cache(prior, noise, draw_system(5, 10, 3));
    REQUIRE(cache.components.size() == 3);
    for (const auto& comp : cache.components) {
        CHECK(comp.gain.rows() == 10);
        CHECK(comp.gain.cols() == 5);
        CHECK(comp.predicted_mean.size() == 5);
    }
}

TEST_CASE("log determinants match a direct determinant evaluation") {
    RandomStream rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        GmmPrior prior;
        prior.M = 2;
        prior.alphas = Vec::Constant(2, 0.5);
        prior.unit_means = build_means(4, 2, MeanLayout::RandomSphere, 100 + trial);
        prior.scale_a = 1.0;
        prior.covariances = {random_spd(4, rng), random_spd(4, rng)};
        const NoiseModel noise = make_noise(4, 0.9);
        const auto sys = draw_system(4, 4, 200 + trial);
        const auto cache = build_cache(prior, noise, sys);

        for (int m = 0; m < 2; ++m) {
            const Mat S = sys.H * prior.covariances[m] * sys.H.transpose() +
                          noise.per_coordinate_variance() * Mat::Identity(4, 4);
            const double direct = std::log(S.determinant());
            CHECK(cache.components[m].log_det_S ==
                  doctest::Approx(direct).epsilon(1e-8));
        }
    }
}

TEST_CASE("responsibilities: single component and symmetric scalar model") {
    const GmmPrior single = make_prior(4, 1, MeanLayout::Ring, 2.0);
    const NoiseModel noise4 = make_noise(4, 1.0);
    const auto cache1 = build_cache(single, noise4, draw_system(4, 4, 7));
    const Vec beta1 = responsibilities(cache1, Vec::Zero(4));
    REQUIRE(beta1.size() == 1);
    CHECK(beta1(0) == doctest::Approx(1.0));

    // mu = +-1, equal weights, x = 0: exact symmetry.
    const auto cache2 = build_cache(scalar_two_component(1.0), make_noise(1, 0.5),
                                    scalar_system(1.0));
    const Vec beta2 = responsibilities(cache2, Vec::Zero(1));
    CHECK(beta2(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(beta2(1) == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS(responsibilities(cache2, Vec::Constant(1, std::nan(""))), NumericalError);
}

TEST_CASE("responsibilities match quadrature posterior weights on the scalar model") {
    const GmmPrior prior = scalar_two_component(2.0);
    const NoiseModel noise = make_noise(1, 0.25);
    const auto sys = scalar_system(1.0);
    const auto cache = build_cache(prior, noise, sys);

    const Vec x = Vec::Constant(1, 1.5);
    const auto quad = testing::quadrature_posterior(prior, noise, sys, x, 10.0, 200001);
    const Vec beta = responsibilities(cache, x);
    CHECK(std::abs(beta(0) - quad.component_weights(0)) < 1e-6);
    CHECK(std::abs(beta(1) - quad.component_weights(1)) < 1e-6);

    const Vec estimate = mmse_estimate(cache, x);
    CHECK(std::abs(estimate(0) - quad.posterior_mean(0)) < 1e-5);
}

TEST_CASE("responsibilities stay normalized under stress geometries") {
    RandomStream rng(23);
    for (const auto& [a, b] : std::vector<std::pair<double, double>>{{9.0, 0.01}, {3.0, 1.0}}) {
        const GmmPrior prior = make_prior(10, 10, MeanLayout::Ring, a);
        const auto cache = build_cache(prior, make_noise(10, b), draw_system(10, 10, 37));
        for (int i = 0; i < 1000; ++i) {
            Vec x(10);
            for (int p = 0; p < 10; ++p) x(p) = 12.0 * rng.gaussian();
            const Vec beta = responsibilities(cache, x);
            CHECK(beta.allFinite());
            CHECK(beta.minCoeff() >= 0.0);
            CHECK(std::abs(beta.sum() - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("M = 1 estimate is the Gaussian conditional mean") {
    // Identity model: estimate = a mu + (x - a mu) / (1 + sigma^2).
    const GmmPrior prior = make_prior(3, 1, MeanLayout::Ring, 2.0);
    const double sigma_sq = 0.5;
    const auto cache = build_cache(prior, make_noise(3, 3.0 * sigma_sq), identity_system(3));
    const Vec mu = 2.0 * prior.unit_means[0];
    RandomStream rng(31);
    for (int i = 0; i < 20; ++i) {
        Vec x(3);
        for (int p = 0; p < 3; ++p) x(p) = 3.0 * rng.gaussian();
        const Vec expected = mu + (x - mu) / (1.0 + sigma_sq);
        CHECK((mmse_estimate(cache, x) - expected).norm() < 1e-12);
    }

    // General SPD covariance and random H, against the explicit-inverse form.
    for (int trial = 0; trial < 10; ++trial) {
        GmmPrior g;
        g.M = 1;
        g.alphas = Vec::Ones(1);
        g.unit_means = build_means(4, 1, MeanLayout::RandomSphere, 300 + trial);
        g.scale_a = 1.5;
        g.covariances = {random_spd(4, rng)};
        const NoiseModel noise = make_noise(5, 2.0);
        const auto sys = draw_system(5, 4, 400 + trial);
        const auto c = build_cache(g, noise, sys);

        const Vec mean = 1.5 * g.unit_means[0];
        const Mat S = sys.H * g.covariances[0] * sys.H.transpose() +
                      noise.per_coordinate_variance() * Mat::Identity(5, 5);
        const Mat S_inv = S.inverse();
        for (int i = 0; i < 5; ++i) {
            Vec x(5);
            for (int p = 0; p < 5; ++p) x(p) = 2.0 * rng.gaussian();
            const Vec expected =
                mean + g.covariances[0] * sys.H.transpose() * (S_inv * (x - sys.H * mean));
            const Vec got = mmse_estimate(c, x);
            CHECK((got - expected).norm() / expected.norm() < 1e-10);
        }
    }
}

TEST_CASE("overwhelming noise collapses the estimate to the prior mean") {
    GmmPrior prior;
    prior.M = 2;
    prior.alphas = Vec{{0.3, 0.7}};
    prior.unit_means = {Vec{{1.0, 0.0, 0.0}}, Vec{{0.0, 1.0, 0.0}}};
    prior.scale_a = 2.0;
    prior.covariances = {Mat::Identity(3, 3), Mat::Identity(3, 3)};
    const NoiseModel noise = make_noise(3, 1e12);
    const auto sys = draw_system(3, 3, 45);
    const auto cache = build_cache(prior, noise, sys);

    const Vec mean = prior_mean(prior);
    RandomStream rng(46);
    for (int i = 0; i < 10; ++i) {
        Vec x(3);
        for (int p = 0; p < 3; ++p) x(p) = 5.0 * rng.gaussian();
        CHECK((mmse_estimate(cache, x) - mean).norm() < 1e-4);
    }

    const Dataset test = generate_dataset(prior, noise, sys, 2000, 47);
    CHECK(std::abs(oracle_nmse_db(prior, noise, sys, test)) < 0.1);
}

TEST_CASE("near-noiseless invertible model recovers the target: floored NMSE") {
    const GmmPrior prior = make_prior(5, 1, MeanLayout::Ring, 1.0);
    const NoiseModel noise = make_noise(5, 1e-12);
    const auto sys = identity_system(5);
    const Dataset test = generate_dataset(prior, noise, sys, 200, 53);
    CHECK(oracle_nmse_db(prior, noise, sys, test) == doctest::Approx(kNmseFloorDb));
}

TEST_CASE("quadrature equivalence for small models") {
    RandomStream rng(59);
    for (int Q : {1, 2}) {
        for (int M : {1, 2, 3}) {
            const GmmPrior prior =
                Q == 1 ? (M == 1 ? make_prior(1, 1, MeanLayout::RandomSphere, 1.5, 61)
                                 : [&] {
                                       GmmPrior p;
                                       p.M = M;
                                       p.alphas = Vec::Constant(M, 1.0 / M);
                                       p.unit_means = build_means(1, M, MeanLayout::RandomSphere,
                                                                  62 + M);
                                       p.scale_a = 1.5;
                                       p.covariances.assign(M, Mat::Identity(1, 1));
                                       return p;
                                   }())
                       : make_prior(2, M, MeanLayout::Ring, 2.0);
            const NoiseModel noise = make_noise(Q, 0.5 * Q);
            const auto sys = draw_system(Q, Q, 70 + 10 * Q + M);
            const auto cache = build_cache(prior, noise, sys);
            const Dataset data = generate_dataset(prior, noise, sys, 20, 80 + M);

            const int nodes = Q == 1 ? 200001 : 561;
            for (int i = 0; i < data.size(); ++i) {
                const Vec x = data.observations.col(i);
                const auto quad = testing::quadrature_posterior(prior, noise, sys, x, 10.0, nodes);
                const Vec est = mmse_estimate(cache, x);
                CHECK((est - quad.posterior_mean).lpNorm<Eigen::Infinity>() < 1e-5);
            }
        }
    }
}

TEST_CASE("cached and reference evaluations agree") {
    const GmmPrior prior = make_prior(6, 4, MeanLayout::Ring, 2.5);
    const NoiseModel noise = make_noise(5, 0.8);
    const auto sys = draw_system(5, 6, 91);
    const auto cache = build_cache(prior, noise, sys);

    RandomStream rng(92);
    for (int i = 0; i < 100; ++i) {
        Vec x(5);
        for (int p = 0; p < 5; ++p) x(p) = 4.0 * rng.gaussian();
        const Vec direct = mmse_estimate_reference(prior, noise, sys, x);
        CHECK((mmse_estimate(cache, x) - direct).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("oracle nmse rejects empty and mismatched datasets") {
    const GmmPrior prior = make_prior(4, 2, MeanLayout::Ring, 1.0);
    const NoiseModel noise = make_noise(4, 1.0);
    const auto sys = draw_system(4, 4, 101);

    const Dataset empty = generate_dataset(prior, noise, sys, 0, 1);
    CHECK_THROWS_AS(oracle_nmse_db(prior, noise, sys, empty), NumericalError);

    const GmmPrior other = make_prior(4, 2, MeanLayout::Ring, 1.5);
    const Dataset mismatched = generate_dataset(other, noise, sys, 50, 2);
    CHECK_THROWS_AS(oracle_nmse_db(prior, noise, sys, mismatched), NumericalError);
}

TEST_CASE("desk-scale oracle nmse matches its frozen golden value") {
    const GmmPrior prior = make_prior(10, 10, MeanLayout::Ring, 3.0);
    const NoiseModel noise = make_noise(10, 1.0);
    const auto sys = draw_system(10, 10, 424242);
    const Dataset test = generate_dataset(prior, noise, sys, 900, 515151);

    const double cached = oracle_nmse_db(prior, noise, sys, test);

    // Same number through the non-cached reference route.
    Mat estimates(10, test.size());
    for (int i = 0; i < test.size(); ++i)
        estimates.col(i) = mmse_estimate_reference(prior, noise, sys, test.observations.col(i));
    const double direct = nmse_db(estimates, test.targets, signal_power(prior));

    CHECK(cached == doctest::Approx(direct).epsilon(1e-9));
    // Golden regression value frozen from the first verified run of this
    // configuration (both evaluation routes agreed).
    CHECK(cached == doctest::Approx(kGoldenNmseDb).epsilon(1e-6));
}
