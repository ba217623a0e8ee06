#pragma once

// Discretized Gelfand triples V ⊂ H ⊂ V*.
//
// All states and all drift outputs live in one coordinate system per space
// (Euclidean axes, sine coefficients, or nodal values). The H inner product
// is diagonal in those coordinates, and the V*-V pairing uses the same
// formula, so "drift in V*" is a statement about growth, not storage.

#include "mvldp/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace mvldp {

enum class SpaceKind { euclidean, spectral_dirichlet, grid_dirichlet };

std::string to_string(SpaceKind kind);

class SpaceSpec {
public:
    /// V = H = R^d.
    static SpaceSpec euclidean(Eigen::Index dim);

    /// H = (W_0^{1,2}(0,1))*, V = L^r(0,1); coordinates are coefficients in the
    /// orthonormal L^2 basis sqrt(2) sin(k pi x), k = 1..modes. L^r norms use a
    /// midpoint rule on 4 * modes points.
    static SpaceSpec spectral_dirichlet(Eigen::Index modes, double r);

    /// H = L^2(0,1), V = W_0^{1,p}(0,1); coordinates are values at the
    /// interior nodes i * h, h = 1 / (nodes + 1).
    static SpaceSpec grid_dirichlet(Eigen::Index nodes, double p);

    SpaceKind kind() const noexcept { return kind_; }
    Eigen::Index dim() const noexcept { return dim_; }
    double v_exponent() const noexcept { return v_exponent_; }

    /// Diagonal of the H Gram matrix in storage coordinates.
    const Eigen::VectorXd& h_weights() const noexcept { return h_weights_; }

    /// Dirichlet Laplacian eigenvalues (k pi)^2 (spectral spaces only).
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

    /// sqrt(2) sin(k pi x_j): rows are modes, columns quadrature nodes (spectral only).
    const Eigen::MatrixXd& sine_table() const noexcept { return sine_table_; }

    Eigen::Index quadrature_points() const noexcept { return sine_table_.cols(); }

    /// Grid spacing h (grid spaces only).
    double spacing() const noexcept { return spacing_; }

    /// Abscissae of pointwise values: quadrature nodes (spectral), interior
    /// nodes (grid), or 0..d-1 (euclidean).
    Eigen::VectorXd abscissae() const;

    void check_dim(Eigen::Index n, const char* what) const;

private:
    SpaceSpec() = default;

    SpaceKind kind_ = SpaceKind::euclidean;
    Eigen::Index dim_ = 0;
    double v_exponent_ = 2.0;
    double spacing_ = 0.0;
    Eigen::VectorXd h_weights_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd sine_table_;
};

template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar h_inner(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v,
               const SpaceSpec& space) {
    space.check_dim(u.size(), "h_inner");
    space.check_dim(v.size(), "h_inner");
    using Scalar = typename DerivedU::Scalar;
    return (space.h_weights().template cast<Scalar>().array() * u.array() * v.array()).sum();
}

template <typename Derived>
typename Derived::Scalar h_norm_sq(const Eigen::MatrixBase<Derived>& u, const SpaceSpec& space) {
    return h_inner(u, u, space);
}

template <typename Derived>
typename Derived::Scalar h_norm(const Eigen::MatrixBase<Derived>& u, const SpaceSpec& space) {
    using std::sqrt;
    return sqrt(h_norm_sq(u, space));
}

/// V*-V duality pairing; `a` is stored in the same coordinates as states.
/// Coincides with h_inner whenever `a` is an H-vector.
template <typename DerivedA, typename DerivedV>
typename DerivedA::Scalar dual_pair(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedV>& v,
                 const SpaceSpec& space) {
    return h_inner(a, v, space);
}

/// Sum of |terms| of the pairing; the floating-point scale of dual_pair.
template <typename DerivedA, typename DerivedV>
double dual_pair_scale(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedV>& v,
                       const SpaceSpec& space) {
    space.check_dim(a.size(), "dual_pair_scale");
    space.check_dim(v.size(), "dual_pair_scale");
    return (space.h_weights().array() * (a.array() * v.array()).abs()).sum();
}

/// Pointwise values: sine reconstruction on the quadrature grid (spectral),
/// nodal values (grid), coordinates (euclidean).
Eigen::VectorXd pointwise(const Eigen::Ref<const Eigen::VectorXd>& u, const SpaceSpec& space);

/// Sine coefficients of quadrature-grid values (spectral only).
Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& values, const SpaceSpec& space);

/// Discrete gradients on the n + 1 grid edges with zero ghost nodes (grid only).
Eigen::VectorXd edge_gradients(const Eigen::Ref<const Eigen::VectorXd>& u, const SpaceSpec& space);

/// ||u||_V: Euclidean norm, quadrature L^r norm, or discrete W_0^{1,p} seminorm.
double v_norm(const Eigen::Ref<const Eigen::VectorXd>& u, const SpaceSpec& space);

/// ||a||_{V*} = sup_v <a, v> / ||v||_V.
///
/// Spectral: the L^{r/(r-1)} norm of -(Laplacian)^{-1} a, through the
/// isometric extension of the Laplacian L^{r'} -> (L^r)*. Grid: the exact
/// discrete dual of the W_0^{1,p} seminorm, inf_c ||S - c||_{l^{p'}} over
/// tail sums S. Euclidean: the Euclidean norm.
double v_star_norm(const Eigen::Ref<const Eigen::VectorXd>& a, const SpaceSpec& space);

}  // namespace mvldp
