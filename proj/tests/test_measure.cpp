#include "mvldp/measure.hpp"
#include "mvldp/random.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace mvldp;

namespace {

Ensemble random_ensemble(Eigen::Index dim, Eigen::Index n, rng::Stream& rs) {
    Ensemble::Matrix pts(dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            pts(i, j) = rs.normal();
        }
    }
    return Ensemble(pts);
}

// Minimum over all permutations of the mean squared H-distance.
double brute_force_w2_sq(const Ensemble& mu, const Ensemble& nu, const SpaceSpec& space) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(mu.size()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            cost += h_norm_sq(mu.point(i) - nu.point(perm[static_cast<std::size_t>(i)]), space);
        }
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(mu.size());
}

Ensemble line(std::initializer_list<double> xs) {
    Ensemble::Matrix m(1, static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) {
        m(0, i++) = x;
    }
    return Ensemble(m);
}

}  // namespace

TEST(Moments, SecondMomentExamples) {
    const auto r1 = SpaceSpec::euclidean(1);
    EXPECT_EQ(second_moment(Ensemble::dirac(State::Zero(1)), r1), 0.0);
    EXPECT_EQ(second_moment(line({1.0, -1.0}), r1), 1.0);
    EXPECT_EQ(second_moment(Ensemble::dirac(Eigen::Vector2d(3.0, 4.0)), SpaceSpec::euclidean(2)), 25.0);
}

TEST(Moments, MeanExamples) {
    const State x = Eigen::Vector3d(0.3, -1.7, 2.5);
    EXPECT_EQ(mean(Ensemble::dirac(x)), x);
    EXPECT_EQ(mean(line({1.0, -1.0}))[0], 0.0);
    EXPECT_EQ(mean(line({1.0, 2.0, 3.0}))[0], 2.0);
}

TEST(Moments, IdenticalPointsGiveDiracValuesExactly) {
    const auto space = SpaceSpec::euclidean(3);
    const State x = Eigen::Vector3d(0.1, 1.0 / 3.0, -7.25);
    const Ensemble many(x.replicate(1, 17));
    EXPECT_EQ(mean(many), mean(Ensemble::dirac(x)));
    EXPECT_EQ(second_moment(many, space), second_moment(Ensemble::dirac(x), space));
}

TEST(Ensemble, RejectsEmpty) {
    EXPECT_THROW(Ensemble(Ensemble::Matrix(2, 0)), InvalidInput);
}

TEST(W2, Examples) {
    const auto r1 = SpaceSpec::euclidean(1);
    const Ensemble mu = line({0.0, 1.0});
    const Ensemble nu = line({1.0, 2.0});
    EXPECT_EQ(w2(mu, mu, r1), 0.0);
    EXPECT_DOUBLE_EQ(w2(mu, nu, r1), 1.0);
    EXPECT_DOUBLE_EQ(w2_assignment(mu, nu, r1), 1.0);
}

TEST(W2, MatchesBruteForceExactly) {
    rng::Stream rs(42);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 1 + trial % 6;
        const Eigen::Index d = 1 + (trial / 6) % 3;
        const auto space = SpaceSpec::euclidean(d);
        const Ensemble mu = random_ensemble(d, n, rs);
        const Ensemble nu = random_ensemble(d, n, rs);
        const double exact = std::sqrt(brute_force_w2_sq(mu, nu, space));
        EXPECT_EQ(w2_assignment(mu, nu, space), exact) << "trial " << trial;
    }
}

TEST(W2, SortedFastPathAgreesWithAssignment) {
    rng::Stream rs(7);
    const auto r1 = SpaceSpec::euclidean(1);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 1 + trial % 40;
        const Ensemble mu = random_ensemble(1, n, rs);
        const Ensemble nu = random_ensemble(1, n, rs);
        EXPECT_NEAR(w2_sorted(mu, nu, r1), w2_assignment(mu, nu, r1), 1e-12);
    }
}

TEST(W2, WeightedSpaceBruteForce) {
    rng::Stream rs(11);
    const auto space = SpaceSpec::spectral_dirichlet(3, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Ensemble mu = random_ensemble(3, 5, rs);
        const Ensemble nu = random_ensemble(3, 5, rs);
        EXPECT_EQ(w2(mu, nu, space), std::sqrt(brute_force_w2_sq(mu, nu, space)));
    }
}

TEST(W2, MetricProperties) {
    rng::Stream rs(3);
    const auto space = SpaceSpec::euclidean(2);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index n = 2 + trial % 7;
        const Ensemble a = random_ensemble(2, n, rs);
        const Ensemble b = random_ensemble(2, n, rs);
        const Ensemble c = random_ensemble(2, n, rs);
        const double ab = w2(a, b, space);
        EXPECT_NEAR(ab, w2(b, a, space), 1e-12);
        EXPECT_EQ(w2(a, a, space), 0.0);
        EXPECT_LE(ab, w2(a, c, space) + w2(c, b, space) + 1e-12);
        double index_coupling = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            index_coupling += h_norm_sq(a.point(i) - b.point(i), space);
        }
        EXPECT_LE(ab * ab, index_coupling / static_cast<double>(n) + 1e-12);
        EXPECT_LE(std::abs(std::sqrt(second_moment(a, space)) - std::sqrt(second_moment(b, space))), ab + 1e-12);
    }
}

TEST(W2, RejectsUnequalSizesAndLargeN) {
    const auto r1 = SpaceSpec::euclidean(1);
    EXPECT_THROW(w2(line({0.0}), line({0.0, 1.0}), r1), InvalidInput);
    rng::Stream rs(1);
    const auto r2 = SpaceSpec::euclidean(2);
    const Ensemble big = random_ensemble(2, kMaxAssignmentSize + 1, rs);
    EXPECT_THROW(w2(big, big, r2), InvalidInput);
    const Ensemble big1 = random_ensemble(1, 2000, rs);
    EXPECT_NO_THROW(w2(big1, big1, r1));
}

TEST(W2, FloatScalar) {
    using EnsembleF = BasicEnsemble<float>;
    EnsembleF::Matrix a(1, 2);
    EnsembleF::Matrix b(1, 2);
    a << 0.0f, 1.0f;
    b << 1.0f, 2.0f;
    const float d = w2(EnsembleF(a), EnsembleF(b), SpaceSpec::euclidean(1));
    EXPECT_FLOAT_EQ(d, 1.0f);
}
