#include "mvldp/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mvldp {

std::string to_string(SpaceKind kind) {
    switch (kind) {
    case SpaceKind::euclidean: return "euclidean";
    case SpaceKind::spectral_dirichlet: return "spectral_dirichlet";
    case SpaceKind::grid_dirichlet: return "grid_dirichlet";
    }
    return "unknown";
}

SpaceSpec SpaceSpec::euclidean(Eigen::Index dim) {
    require(dim >= 1, "euclidean space needs dimension >= 1");
    SpaceSpec s;
    s.kind_ = SpaceKind::euclidean;
    s.dim_ = dim;
    s.v_exponent_ = 2.0;
    s.h_weights_ = Eigen::VectorXd::Ones(dim);
    return s;
}

SpaceSpec SpaceSpec::spectral_dirichlet(Eigen::Index modes, double r) {
    require(modes >= 1, "spectral space needs at least one mode");
    require(r > 1.0, "spectral space needs V exponent r > 1");
    SpaceSpec s;
    s.kind_ = SpaceKind::spectral_dirichlet;
    s.dim_ = modes;
    s.v_exponent_ = r;
    s.eigenvalues_.resize(modes);
    for (Eigen::Index k = 0; k < modes; ++k) {
        const double kpi = static_cast<double>(k + 1) * std::numbers::pi;
        s.eigenvalues_[k] = kpi * kpi;
    }
    s.h_weights_ = s.eigenvalues_.cwiseInverse();

    const Eigen::Index q = 4 * modes;
    s.sine_table_.resize(modes, q);
    for (Eigen::Index k = 0; k < modes; ++k) {
        for (Eigen::Index j = 0; j < q; ++j) {
            const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(q);
            s.sine_table_(k, j) =
                std::numbers::sqrt2 * std::sin(static_cast<double>(k + 1) * std::numbers::pi * x);
        }
    }
    return s;
}

SpaceSpec SpaceSpec::grid_dirichlet(Eigen::Index nodes, double p) {
    require(nodes >= 1, "grid space needs at least one interior node");
    require(p > 1.0, "grid space needs V exponent p > 1");
    SpaceSpec s;
    s.kind_ = SpaceKind::grid_dirichlet;
    s.dim_ = nodes;
    s.v_exponent_ = p;
    s.spacing_ = 1.0 / static_cast<double>(nodes + 1);
    s.h_weights_ = Eigen::VectorXd::Constant(nodes, s.spacing_);
    return s;
}

Eigen::VectorXd SpaceSpec::abscissae() const {
    switch (kind_) {
    case SpaceKind::spectral_dirichlet: {
        const Eigen::Index q = quadrature_points();
        return (Eigen::VectorXd::LinSpaced(q, 0.0, static_cast<double>(q - 1)).array() + 0.5) /
               static_cast<double>(q);
    }
    case SpaceKind::grid_dirichlet:
        return Eigen::VectorXd::LinSpaced(dim_, 1.0, static_cast<double>(dim_)) * spacing_;
    case SpaceKind::euclidean:
        break;
    }
    return Eigen::VectorXd::LinSpaced(dim_, 0.0, static_cast<double>(dim_ - 1));
}

void SpaceSpec::check_dim(Eigen::Index n, const char* what) const {
    if (n != dim_) {
        throw InvalidInput(std::string(what) + ": dimension " + std::to_string(n) +
                           " does not match space dimension " + std::to_string(dim_));
    }
}

Eigen::VectorXd pointwise(const Eigen::Ref<const Eigen::VectorXd>& u, const SpaceSpec& space) {
    space.check_dim(u.size(), "pointwise");
    if (space.kind() == SpaceKind::spectral_dirichlet) {
        return space.sine_table().transpose() * u;
    }
    return u;
}

Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& values, const SpaceSpec& space) {
    require(space.kind() == SpaceKind::spectral_dirichlet, "project: spectral space required");
    require(values.size() == space.quadrature_points(), "project: expected quadrature values");
    return space.sine_table() * values / static_cast<double>(space.quadrature_points());
}

Eigen::VectorXd edge_gradients(const Eigen::Ref<const Eigen::VectorXd>& u, const SpaceSpec& space) {
    require(space.kind() == SpaceKind::grid_dirichlet, "edge_gradients: grid space required");
    space.check_dim(u.size(), "edge_gradients");
    const Eigen::Index n = u.size();
    Eigen::VectorXd g(n + 1);
    g[0] = u[0];
    g.segment(1, n - 1) = u.tail(n - 1) - u.head(n - 1);
    g[n] = -u[n - 1];
    return g / space.spacing();
}

double v_norm(const Eigen::Ref<const Eigen::VectorXd>& u, const SpaceSpec& space) {
    space.check_dim(u.size(), "v_norm");
    const double r = space.v_exponent();
    switch (space.kind()) {
    case SpaceKind::euclidean:
        return u.norm();
    case SpaceKind::spectral_dirichlet: {
        const Eigen::VectorXd values = pointwise(u, space);
        const double mean = values.array().abs().pow(r).mean();
        return std::pow(mean, 1.0 / r);
    }
    case SpaceKind::grid_dirichlet: {
        const Eigen::VectorXd g = edge_gradients(u, space);
        return std::pow(space.spacing() * g.array().abs().pow(r).sum(), 1.0 / r);
    }
    }
    return 0.0;
}

namespace {

double weighted_lq(const Eigen::ArrayXd& values, double weight, double q) {
    return std::pow(weight * values.abs().pow(q).sum(), 1.0 / q);
}

}  // namespace

double v_star_norm(const Eigen::Ref<const Eigen::VectorXd>& a, const SpaceSpec& space) {
    space.check_dim(a.size(), "v_star_norm");
    const double p = space.v_exponent();
    const double q = p / (p - 1.0);
    switch (space.kind()) {
    case SpaceKind::euclidean:
        return a.norm();
    case SpaceKind::spectral_dirichlet: {
        const Eigen::VectorXd psi = a.cwiseQuotient(space.eigenvalues());
        const Eigen::ArrayXd values = pointwise(psi, space).array();
        return weighted_lq(values, 1.0 / static_cast<double>(values.size()), q);
    }
    case SpaceKind::grid_dirichlet: {
        const Eigen::Index n = a.size();
        const double h = space.spacing();
        // S_e = h * sum_{i > e} a_i over edges e = 0..n (S_n = 0).
        Eigen::ArrayXd tail = Eigen::ArrayXd::Zero(n + 1);
        for (Eigen::Index e = n - 1; e >= 0; --e) {
            tail[e] = tail[e + 1] + h * a[e];
        }
        // f(c) = sum h |S_e - c|^q is convex; its derivative is monotone in c.
        double lo = tail.minCoeff();
        double hi = tail.maxCoeff();
        auto slope = [&](double c) {
            return ((tail - c).abs().pow(q - 1.0) * (c - tail).sign()).sum();
        };
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            (slope(mid) > 0.0 ? hi : lo) = mid;
        }
        return weighted_lq(tail - 0.5 * (lo + hi), h, q);
    }
    }
    return 0.0;
}

}  // namespace mvldp
