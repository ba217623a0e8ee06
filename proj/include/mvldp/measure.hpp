#pragma once

// Uniform empirical measures on the discretized state space and the
// Wasserstein-2 distance between equal-size ensembles.

#include "mvldp/spaces.hpp"
#include "mvldp/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace mvldp {

/// N points with weights 1/N, stored as the columns of a dim x N matrix.
/// N = 1 is the Dirac mass at its point.
template <typename Scalar>
class BasicEnsemble {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    explicit BasicEnsemble(Matrix points) : points_(std::move(points)) {
        require(points_.cols() >= 1, "ensemble needs at least one point");
        require(points_.rows() >= 1, "ensemble points need dimension >= 1");
    }

    template <typename Derived>
    static BasicEnsemble dirac(const Eigen::MatrixBase<Derived>& x) {
        return BasicEnsemble(Matrix(x));
    }

    Eigen::Index size() const noexcept { return points_.cols(); }
    Eigen::Index dim() const noexcept { return points_.rows(); }

    auto point(Eigen::Index i) const { return points_.col(i); }

    const Matrix& points() const noexcept { return points_; }

private:
    Matrix points_;
};

using Ensemble = BasicEnsemble<double>;

// Moments are accumulated as deviations from the first point, so a
// measure whose points coincide returns that point's values bit-exactly.

template <typename Scalar>
StateT<Scalar> mean(const BasicEnsemble<Scalar>& ens) {
    const auto& pts = ens.points();
    StateT<Scalar> acc = StateT<Scalar>::Zero(ens.dim());
    for (Eigen::Index i = 1; i < ens.size(); ++i) {
        acc += pts.col(i) - pts.col(0);
    }
    return pts.col(0) + acc / static_cast<Scalar>(ens.size());
}

template <typename Scalar>
Scalar second_moment(const BasicEnsemble<Scalar>& ens, const SpaceSpec& space) {
    space.check_dim(ens.dim(), "second_moment");
    const auto& pts = ens.points();
    const Scalar first = h_norm_sq(pts.col(0), space);
    Scalar acc = 0;
    for (Eigen::Index i = 1; i < ens.size(); ++i) {
        acc += h_norm_sq(pts.col(i), space) - first;
    }
    return first + acc / static_cast<Scalar>(ens.size());
}

namespace detail {

/// Minimum-cost perfect matching (Hungarian method with potentials, O(N^3)).
/// Returns the column assigned to each row.
template <typename Scalar>
std::vector<Eigen::Index> solve_assignment(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cost) {
    const Eigen::Index n = cost.rows();
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    // 1-based arrays; index 0 is the virtual source column.
    std::vector<Scalar> row_pot(n + 1, 0), col_pot(n + 1, 0);
    std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
    for (Eigen::Index i = 1; i <= n; ++i) {
        match[0] = i;
        Eigen::Index j0 = 0;
        std::vector<Scalar> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const Eigen::Index i0 = match[j0];
            Scalar delta = inf;
            Eigen::Index j1 = 0;
            for (Eigen::Index j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const Scalar cur = cost(i0 - 1, j - 1) - row_pot[i0] - col_pot[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    row_pot[match[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const Eigen::Index j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Eigen::Index> assignment(n);
    for (Eigen::Index j = 1; j <= n; ++j) {
        assignment[match[j] - 1] = j - 1;
    }
    return assignment;
}

template <typename Scalar>
void check_pair(const BasicEnsemble<Scalar>& mu, const BasicEnsemble<Scalar>& nu,
                const SpaceSpec& space) {
    space.check_dim(mu.dim(), "w2");
    space.check_dim(nu.dim(), "w2");
    if (mu.size() != nu.size()) {
        throw InvalidInput("w2: ensembles must have equal size (got " + std::to_string(mu.size()) +
                           " and " + std::to_string(nu.size()) + ")");
    }
}

}  // namespace detail

/// Largest ensemble accepted by the exact assignment solver.
inline constexpr Eigen::Index kMaxAssignmentSize = 512;

/// Optimal matching of mu's points to nu's points (row i -> returned[i]).
template <typename Scalar>
std::vector<Eigen::Index> optimal_matching(const BasicEnsemble<Scalar>& mu,
                                           const BasicEnsemble<Scalar>& nu,
                                           const SpaceSpec& space) {
    detail::check_pair(mu, nu, space);
    const Eigen::Index n = mu.size();
    if (n > kMaxAssignmentSize) {
        throw InvalidInput("w2: exact assignment limited to " + std::to_string(kMaxAssignmentSize) +
                           " points, got " + std::to_string(n));
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cost(i, j) = h_norm_sq(mu.point(i) - nu.point(j), space);
        }
    }
    return detail::solve_assignment(cost);
}

/// Squared transport cost of a given matching, averaged over points.
template <typename Scalar>
Scalar matching_cost(const BasicEnsemble<Scalar>& mu, const BasicEnsemble<Scalar>& nu,
                     const std::vector<Eigen::Index>& matching, const SpaceSpec& space) {
    Scalar total = 0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        total += h_norm_sq(mu.point(i) - nu.point(matching[i]), space);
    }
    return total / static_cast<Scalar>(mu.size());
}

/// W2 through the general assignment solver, for any dimension.
template <typename Scalar>
Scalar w2_assignment(const BasicEnsemble<Scalar>& mu, const BasicEnsemble<Scalar>& nu,
                     const SpaceSpec& space) {
    using std::sqrt;
    return sqrt(matching_cost(mu, nu, optimal_matching(mu, nu, space), space));
}

/// W2 for one-dimensional states via the monotone (sorted) coupling.
template <typename Scalar>
Scalar w2_sorted(const BasicEnsemble<Scalar>& mu, const BasicEnsemble<Scalar>& nu,
                 const SpaceSpec& space) {
    detail::check_pair(mu, nu, space);
    require(mu.dim() == 1, "w2_sorted: one-dimensional states required");
    std::vector<Scalar> x(mu.points().data(), mu.points().data() + mu.size());
    std::vector<Scalar> y(nu.points().data(), nu.points().data() + nu.size());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const Scalar weight = static_cast<Scalar>(space.h_weights()[0]);
    Scalar total = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        total += weight * (x[i] - y[i]) * (x[i] - y[i]);
    }
    using std::sqrt;
    return sqrt(total / static_cast<Scalar>(x.size()));
}

/// Wasserstein-2 distance between equal-size uniform ensembles.
template <typename Scalar>
Scalar w2(const BasicEnsemble<Scalar>& mu, const BasicEnsemble<Scalar>& nu, const SpaceSpec& space) {
    detail::check_pair(mu, nu, space);
    if (mu.dim() == 1) {
        return w2_sorted(mu, nu, space);
    }
    return w2_assignment(mu, nu, space);
}

}  // namespace mvldp
