#include "mvldp/models.hpp"
#include "mvldp/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace mvldp;

namespace {

constexpr double pi = std::numbers::pi;

State random_state(Eigen::Index n, rng::Stream& rs, double scale = 1.0) {
    State v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = scale * rs.normal() / static_cast<double>(i + 1);
    }
    return v;
}

LawMoments dirac_moments(const State& x, const SpaceSpec& space) {
    return moments(Ensemble::dirac(x), space);
}

// Central finite-difference directional derivative of u -> <y, f(u)>.
template <typename F>
State fd_vjp(F&& f, const State& u, const State& y, double h = 1e-6) {
    State out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        State up = u;
        State down = u;
        up[i] += h;
        down[i] -= h;
        out[i] = (y.dot(f(up)) - y.dot(f(down))) / (2.0 * h);
    }
    return out;
}

}  // namespace

TEST(Drift, MvsdeExample) {
    const ModelSpec m = make_mvsde(1, -1.0, 0.5, 1.0);
    const State u = State::Ones(1);
    EXPECT_DOUBLE_EQ(drift(m, 0.0, u, Ensemble::dirac(u))[0], -0.5);
}

TEST(Drift, PorousMediaHeatLimit) {
    ModelSpec m = make_porous_media(8, 2.0, 0.0);
    const State e1 = State::Unit(8, 0);
    const State a = drift(m, 0.0, e1, Ensemble::dirac(e1));
    EXPECT_NEAR(a[0], -pi * pi, 1e-11);
    EXPECT_NEAR(a.tail(7).norm(), 0.0, 1e-11);
    rng::Stream rs(2);
    const State u = random_state(8, rs);
    const State au = drift(m, 0.0, u, Ensemble::dirac(u));
    for (Eigen::Index k = 0; k < 8; ++k) {
        EXPECT_NEAR(au[k], -m.space.eigenvalues()[k] * u[k], 1e-10 * m.space.eigenvalues()[k]);
    }
}

TEST(Drift, PorousMediaPairingIsMinusLpNorm) {
    const State e1 = State::Unit(8, 0);
    const ModelSpec heat = make_porous_media(8, 2.0, 0.0);
    EXPECT_NEAR(2.0 * dual_pair(drift(heat, 0.0, e1, Ensemble::dirac(e1)), e1, heat.space), -2.0, 1e-12);

    const ModelSpec m = make_porous_media(6, 4.0, 0.0);
    rng::Stream rs(8);
    for (int t = 0; t < 10; ++t) {
        const State u = random_state(6, rs);
        const double quartic = [&] {
            const int q = 100000;
            double sum = 0.0;
            for (int j = 0; j < q; ++j) {
                const double x = (j + 0.5) / q;
                double f = 0.0;
                for (int k = 0; k < 6; ++k) {
                    f += u[k] * std::sqrt(2.0) * std::sin((k + 1) * pi * x);
                }
                sum += std::pow(f, 4);
            }
            return sum / q;
        }();
        const double pair = dual_pair(drift(m, 0.0, u, Ensemble::dirac(u)), u, m.space);
        EXPECT_NEAR(pair, -quartic, 1e-9 * std::max(1.0, quartic));
    }
}

TEST(Drift, PorousMediaMeasureDependence) {
    const ModelSpec m = make_porous_media(4, 2.0, 0.3);
    const State u = State::Unit(4, 1);
    Ensemble::Matrix pts(4, 2);
    pts.col(0) = State::Unit(4, 0);
    pts.col(1) = -State::Unit(4, 0);
    const Ensemble mu(pts);
    const double m2 = second_moment(mu, m.space);
    EXPECT_NEAR(m2, 1.0 / (pi * pi), 1e-15);
    const State a = drift(m, 0.0, u, mu);
    EXPECT_NEAR(a[1], -m.space.eigenvalues()[1] * (1.0 + 0.3 * m2), 1e-10);
}

TEST(Drift, PLaplaceStencil) {
    const ModelSpec m = make_p_laplace(3, 2.0, 0.0, 0.0, 0.0);
    const State u = Eigen::Vector3d(0.0, 1.0, 0.0);
    const State a = drift(m, 0.0, u, Ensemble::dirac(u));
    const double h = m.space.spacing();
    EXPECT_NEAR(a[0], 1.0 / (h * h), 1e-12);
    EXPECT_NEAR(a[1], -2.0 / (h * h), 1e-12);
    EXPECT_NEAR(a[2], 1.0 / (h * h), 1e-12);
}

TEST(Drift, PLaplaceReactionTerms) {
    const ModelSpec m = make_p_laplace(3, 3.0, 0.1, 0.5, 0.25);
    const State u = State::Zero(3);
    const State mean = Eigen::Vector3d(1.0, 2.0, 6.0);
    const State a = drift(m, 0.0, u, LawMoments{mean, 0.0});
    for (Eigen::Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(a[i], 0.1 + 0.25 * 3.0, 1e-14);
    }
}

TEST(Drift, StabilityGuardEstimate) {
    const ModelSpec heat = make_porous_media(4, 2.0, 0.0);
    const State u = State::Unit(4, 0);
    const auto ev = evaluate_drift(heat, 0.0, u, dirac_moments(u, heat.space));
    EXPECT_NEAR(ev.stiffness, heat.space.eigenvalues()[3], 1e-9);
    const ModelSpec lap = make_p_laplace(7, 2.0, 0, 0, 0);
    const auto ev2 = evaluate_drift(lap, 0.0, State::Ones(7), dirac_moments(State::Ones(7), lap.space));
    const double h = lap.space.spacing();
    EXPECT_NEAR(ev2.stiffness, 4.0 / (h * h), 1e-9);
}

TEST(Diffusion, Examples) {
    ModelSpec m = make_mvsde(1, -1.0, 0.5, 0.7);
    const State u = State::Ones(1);
    const LawMoments law = dirac_moments(u, m.space);
    EXPECT_EQ(apply_diffusion(m, 0.0, u, law, Eigen::VectorXd::Zero(1)).norm(), 0.0);
    EXPECT_DOUBLE_EQ(apply_diffusion(m, 0.0, u, law, Eigen::VectorXd::Ones(1))[0], 0.7);

    ModelSpec m2 = make_mvsde(1, -1.0, 0.5, 0.0);
    m2.channels.clear();
    add_channels(m2, 1, 0.0, 0.0, 1.0);
    Ensemble::Matrix pts(1, 2);
    pts << 1.0, -1.0;
    EXPECT_DOUBLE_EQ(apply_diffusion(m2, 0.0, u, Ensemble(pts), Eigen::VectorXd::Ones(1))[0], 1.0);
}

TEST(Diffusion, HilbertSchmidtNorm) {
    ModelSpec zero = make_mvsde(2, -1.0, 0.0, 0.0);
    const State u = Eigen::Vector2d(0.3, -0.1);
    EXPECT_EQ(hs_norm_sq(zero, 0.0, u, Ensemble::dirac(u)), 0.0);
    ModelSpec two = make_mvsde(1, -1.0, 0.0, 2.0);
    EXPECT_DOUBLE_EQ(hs_norm_sq(two, 0.0, State::Ones(1), Ensemble::dirac(State::Ones(1))), 4.0);

    rng::Stream rs(12);
    for (auto m : {make_porous_media(6, 3.0, 0.1), make_p_laplace(9, 3.0, 0.1, 0.5, 0.25), make_mvsde(3, -1, 0.5, 1)}) {
        m.channels.clear();
        add_channels(m, std::min<Eigen::Index>(3, m.dim()), 0.4, 0.3, 0.2);
        m.hoelder_gamma = 0.5;
        for (int t = 0; t < 5; ++t) {
            const State x = random_state(m.dim(), rs);
            const LawMoments law{random_state(m.dim(), rs), 0.8};
            double channel_sum = 0.0;
            for (Eigen::Index j = 0; j < m.noise_rank(); ++j) {
                channel_sum += h_norm_sq(apply_diffusion(m, 0.7, x, law, Eigen::VectorXd::Unit(m.noise_rank(), j)), m.space);
            }
            EXPECT_NEAR(hs_norm_sq(m, 0.7, x, law), channel_sum, 1e-12 * std::max(1.0, channel_sum));
        }
    }
}

TEST(Diffusion, TimeFactor) {
    ModelSpec m = make_mvsde(1, -1.0, 0.0, 1.0);
    EXPECT_EQ(time_factor(m, 0.4), 1.0);
    m.hoelder_gamma = 0.5;
    EXPECT_DOUBLE_EQ(time_factor(m, 0.25), 1.5);
}

TEST(Vjp, DriftMatchesFiniteDifferences) {
    rng::Stream rs(77);
    for (const auto& m : {make_mvsde(3, -1.0, 0.5, 1.0), make_porous_media(6, 4.0, 0.1), make_porous_media(5, 3.0, 0.2),
                          make_p_laplace(8, 4.0, 0.1, 0.5, 0.25), make_p_laplace(6, 3.0, 0.0, -0.3, 0.1)}) {
        const State u = random_state(m.dim(), rs);
        const State y = random_state(m.dim(), rs);
        const LawMoments law{random_state(m.dim(), rs), 0.3};
        const State exact = drift_vjp(m, 0.2, u, law, y);
        const State approx = fd_vjp([&](const State& x) { return drift(m, 0.2, x, law); }, u, y);
        EXPECT_LT((exact - approx).norm(), 1e-6 * std::max(1.0, exact.norm())) << to_string(m.family);
    }
}

TEST(Vjp, DiffusionMatchesFiniteDifferences) {
    rng::Stream rs(78);
    ModelSpec m = make_p_laplace(6, 3.0, 0.1, 0.5, 0.25);
    add_channels(m, 2, 0.3, 0.8, 0.1);
    m.hoelder_gamma = 0.3;
    const State u = random_state(6, rs);
    const State y = random_state(6, rs);
    const LawMoments law{random_state(6, rs), 0.4};
    const Eigen::VectorXd w = Eigen::Vector2d(0.7, -1.3);
    const State exact = diffusion_vjp(m, 0.5, u, law, w, y);
    const State approx = fd_vjp([&](const State& x) { return apply_diffusion(m, 0.5, x, law, w); }, u, y);
    EXPECT_LT((exact - approx).norm(), 1e-7 * std::max(1.0, exact.norm()));
}

TEST(ModelSpec, Validation) {
    ModelSpec m = make_mvsde(2, -1.0, 0.5, 1.0);
    EXPECT_NO_THROW(m.validate());
    m.theta = 0.0;
    EXPECT_THROW(m.validate(), InvalidInput);
    ModelSpec mismatch = make_porous_media(4, 3.0, 0.1);
    mismatch.space = SpaceSpec::euclidean(4);
    EXPECT_THROW(mismatch.validate(), InvalidInput);
    ModelSpec bad_channel = make_mvsde(2, -1.0, 0.5, 1.0);
    bad_channel.channels[0].direction = State::Ones(3);
    EXPECT_THROW(bad_channel.validate(), InvalidInput);
    EXPECT_THROW(parse_family("heat"), InvalidInput);
    EXPECT_EQ(parse_family("p_laplace"), ModelFamily::p_laplace);
}

TEST(ModelSpec, DefaultChannelDirections) {
    const auto spectral = SpaceSpec::spectral_dirichlet(5, 3.0);
    EXPECT_EQ(default_channel_direction(spectral, 2), State::Unit(5, 2));
    const auto grid = SpaceSpec::grid_dirichlet(9, 3.0);
    const State f = default_channel_direction(grid, 0);
    const Eigen::VectorXd x = grid.abscissae();
    for (Eigen::Index i = 0; i < 9; ++i) {
        EXPECT_NEAR(f[i], std::sqrt(2.0) * std::sin(pi * x[i]), 1e-15);
    }
}
