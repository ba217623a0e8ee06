#pragma once

// Explicit Euler(-Maruyama) solvers for the limit equation, the interacting
// particle approximation of the noisy equation, the skeleton equation and the
// controlled equation with a frozen law path.

#include "mvldp/measure.hpp"
#include "mvldp/models.hpp"
#include "mvldp/parallel.hpp"
#include "mvldp/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mvldp {

class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }
    double time(std::size_t i) const noexcept { return static_cast<double>(i) * dt(); }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_;
    std::size_t steps_;
};

/// Piecewise-constant deterministic control phi: [0,T] -> R^m, one row per step.
class Control {
public:
    Control(TimeGrid grid, Eigen::MatrixXd values);

    static Control zero(const TimeGrid& grid, Eigen::Index rank);
    static Control constant(const TimeGrid& grid, const Eigen::VectorXd& value);
    /// base + amplitude sin(2 pi n t) along `channel`, averaged over each step.
    static Control oscillatory(const TimeGrid& grid, const Eigen::VectorXd& base, double amplitude,
                               double frequency, Eigen::Index channel = 0);

    const TimeGrid& grid() const noexcept { return grid_; }
    Eigen::Index rank() const noexcept { return values_.cols(); }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    Eigen::MatrixXd& values() noexcept { return values_; }
    Eigen::VectorXd at(std::size_t step) const { return values_.row(static_cast<Eigen::Index>(step)).transpose(); }

private:
    TimeGrid grid_;
    Eigen::MatrixXd values_;
};

/// (1/2) sum_i |phi_i|^2 dt.
double action(const Control& control);

/// Membership in S_M = {phi : int |phi|^2 <= M}.
bool in_level_set(const Control& control, double radius_m);

struct Trajectory {
    TimeGrid grid;
    Eigen::MatrixXd states;  // dim x (steps + 1)

    auto state(std::size_t i) const { return states.col(static_cast<Eigen::Index>(i)); }
    State terminal() const { return states.col(states.cols() - 1); }
};

struct LawPath {
    TimeGrid grid;
    std::vector<Ensemble> laws;  // steps + 1 ensembles with a common size
};

/// Dirac law path of a deterministic trajectory.
LawPath dirac_path(const Trajectory& path);

/// Moments of every law along the path.
std::vector<LawMoments> law_moments(const LawPath& law, const SpaceSpec& space);

struct ParticleRun {
    LawPath law;

    std::size_t size() const { return static_cast<std::size_t>(law.laws.front().size()); }
    Trajectory path(std::size_t i) const;
    std::vector<Trajectory> paths() const;
    /// max over particles and nodes of ||X||_H^2.
    double max_energy(const SpaceSpec& space) const;
};

Trajectory simulate_limit(const ModelSpec& model, const State& x0, const TimeGrid& grid);

/// N coupled particles driven by independent Brownian increments keyed by
/// (seed, particle, step); each step sees the empirical law of all particles.
ParticleRun simulate_particles(const ModelSpec& model, const State& x0, double eps,
                               std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                               const ExecPolicy& exec = {});

/// Terminal ensemble of simulate_particles without recording the path.
Ensemble simulate_particles_terminal(const ModelSpec& model, const State& x0, double eps,
                                     std::size_t particles, const TimeGrid& grid,
                                     std::uint64_t seed, const ExecPolicy& exec = {});

/// Runs the particle system and hands every node's ensemble to `on_node`
/// (node index 0..steps) without storing the path.
void simulate_particles_streaming(const ModelSpec& model, const State& x0, double eps,
                                  std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                                  const ExecPolicy& exec,
                                  const std::function<void(std::size_t, const Ensemble&)>& on_node);

/// Moments of the particle system's empirical law at every node.
std::vector<LawMoments> simulate_particle_moments(const ModelSpec& model, const State& x0, double eps,
                                                  std::size_t particles, const TimeGrid& grid,
                                                  std::uint64_t seed, const ExecPolicy& exec = {});

/// Controlled equation: drift and diffusion see the supplied law path, the
/// control enters through B phi and the noise is scaled by sqrt(eps). The
/// noise stream is that of particle `path_index` under the same seed.
Trajectory simulate_controlled(const ModelSpec& model, const State& x0, double eps,
                               const Control& control, const LawPath& law, const TimeGrid& grid,
                               std::uint64_t seed, std::uint64_t path_index = 0);

Trajectory simulate_controlled(const ModelSpec& model, const State& x0, double eps,
                               const Control& control, const std::vector<LawMoments>& law,
                               const TimeGrid& grid, std::uint64_t seed,
                               std::uint64_t path_index = 0);

/// Skeleton path: deterministic, with the law frozen at the Dirac path of `limit`.
Trajectory solve_skeleton(const ModelSpec& model, const State& x0, const Control& control,
                          const Trajectory& limit, const TimeGrid& grid);

/// int_0^T ||X_t - X_{t(delta)}||_H^2 dt with t(delta) = floor(t/delta) delta,
/// as a left Riemann sum over the grid. delta must be a multiple of dt.
double time_increment_stat(const Trajectory& path, double delta, const SpaceSpec& space);

/// sup_t ||X_t - Y_t||_H over the common grid.
double sup_distance(const Trajectory& x, const Trajectory& y, const SpaceSpec& space);

namespace detail {

/// One explicit Euler step; `impulse` (channel coordinates) is skipped when null or zero.
State euler_step(const ModelSpec& model, double t, double dt, const State& x, const LawMoments& law,
                 const Eigen::VectorXd* impulse, std::size_t step);

/// sqrt(dt) * N(0, I_m) increment of particle `stream` at `step`.
Eigen::VectorXd brownian_increment(std::uint64_t seed, std::uint64_t stream, std::size_t step,
                                   Eigen::Index rank, double dt);

}  // namespace detail

}  // namespace mvldp
