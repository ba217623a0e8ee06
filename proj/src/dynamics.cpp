#include "mvldp/dynamics.hpp"

#include "mvldp/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mvldp {

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    require(std::isfinite(horizon) && horizon > 0.0, "time grid: horizon must be positive");
    require(steps >= 1, "time grid: steps must be >= 1");
}

Control::Control(TimeGrid grid, Eigen::MatrixXd values) : grid_(grid), values_(std::move(values)) {
    require(values_.rows() == static_cast<Eigen::Index>(grid_.steps()),
            "control: one row per time step required");
    require(values_.allFinite(), "control: values must be finite");
}

Control Control::zero(const TimeGrid& grid, Eigen::Index rank) {
    return Control(grid, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.steps()), rank));
}

Control Control::constant(const TimeGrid& grid, const Eigen::VectorXd& value) {
    return Control(grid, value.transpose().replicate(static_cast<Eigen::Index>(grid.steps()), 1));
}

Control Control::oscillatory(const TimeGrid& grid, const Eigen::VectorXd& base, double amplitude,
                             double frequency, Eigen::Index channel) {
    require(channel >= 0 && channel < base.size(), "oscillatory control: channel out of range");
    Control c = constant(grid, base);
    if (amplitude == 0.0 || frequency == 0.0) {
        return c;
    }
    const double omega = 2.0 * std::numbers::pi * frequency;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
        const double avg =
            (std::cos(omega * grid.time(i)) - std::cos(omega * grid.time(i + 1))) / (omega * grid.dt());
        c.values()(static_cast<Eigen::Index>(i), channel) += amplitude * avg;
    }
    return c;
}

double action(const Control& control) {
    return 0.5 * control.values().squaredNorm() * control.grid().dt();
}

bool in_level_set(const Control& control, double radius_m) {
    return 2.0 * action(control) <= radius_m;
}

LawPath dirac_path(const Trajectory& path) {
    LawPath law{path.grid, {}};
    law.laws.reserve(static_cast<std::size_t>(path.states.cols()));
    for (Eigen::Index i = 0; i < path.states.cols(); ++i) {
        law.laws.push_back(Ensemble::dirac(path.states.col(i)));
    }
    return law;
}

std::vector<LawMoments> law_moments(const LawPath& law, const SpaceSpec& space) {
    std::vector<LawMoments> out;
    out.reserve(law.laws.size());
    for (const auto& ens : law.laws) {
        out.push_back(moments(ens, space));
    }
    return out;
}

Trajectory ParticleRun::path(std::size_t i) const {
    require(i < size(), "particle index out of range");
    Trajectory traj{law.grid, Eigen::MatrixXd(law.laws.front().dim(), static_cast<Eigen::Index>(law.laws.size()))};
    for (std::size_t k = 0; k < law.laws.size(); ++k) {
        traj.states.col(static_cast<Eigen::Index>(k)) = law.laws[k].point(static_cast<Eigen::Index>(i));
    }
    return traj;
}

std::vector<Trajectory> ParticleRun::paths() const {
    std::vector<Trajectory> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        out.push_back(path(i));
    }
    return out;
}

double ParticleRun::max_energy(const SpaceSpec& space) const {
    double worst = 0.0;
    for (const auto& ens : law.laws) {
        const Eigen::VectorXd e = (ens.points().array().square().colwise() * space.h_weights().array())
                                      .colwise()
                                      .sum()
                                      .transpose();
        worst = std::max(worst, e.maxCoeff());
    }
    return worst;
}

namespace detail {

State euler_step(const ModelSpec& model, double t, double dt, const State& x, const LawMoments& law,
                 const Eigen::VectorXd* impulse, std::size_t step) {
    const DriftEvaluation ev = evaluate_drift(model, t, x, law);
    if (dt * ev.stiffness > 1.0) {
        std::ostringstream msg;
        msg << "explicit Euler stability guard tripped: dt * stiffness = " << dt * ev.stiffness
            << " > 1; reduce dt or the number of modes/nodes";
        throw BlowUp(msg.str(), step);
    }
    State next = x + dt * ev.value;
    if (impulse != nullptr && !impulse->isZero(0.0)) {
        next += apply_diffusion(model, t, x, law, *impulse);
    }
    if (!next.allFinite()) {
        throw BlowUp("non-finite state", step + 1);
    }
    return next;
}

Eigen::VectorXd brownian_increment(std::uint64_t seed, std::uint64_t stream, std::size_t step,
                                   Eigen::Index rank, double dt) {
    Eigen::VectorXd dw(rank);
    const double scale = std::sqrt(dt);
    for (Eigen::Index j = 0; j < rank; ++j) {
        dw[j] = scale * rng::normal(seed, stream, step, static_cast<std::uint64_t>(j));
    }
    return dw;
}

}  // namespace detail

namespace {

void check_initial(const ModelSpec& model, const State& x0) {
    model.validate();
    model.space.check_dim(x0.size(), "initial state");
    require(x0.allFinite(), "initial state must be finite");
}

template <typename OnNode>
void run_particles(const ModelSpec& model, const State& x0, double eps, std::size_t particles,
                   const TimeGrid& grid, std::uint64_t seed, const ExecPolicy& exec, OnNode&& on_node) {
    check_initial(model, x0);
    require(eps >= 0.0 && std::isfinite(eps), "particles: eps must be >= 0");
    require(particles >= 1, "particles: N must be >= 1");
    const auto n = static_cast<Eigen::Index>(particles);
    const double dt = grid.dt();
    const double root_eps = std::sqrt(eps);
    Ensemble::Matrix current = x0.replicate(1, n);
    Ensemble::Matrix next(current.rows(), n);
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        Ensemble ens(current);
        const LawMoments law = moments(ens, model.space);
        on_node(k, std::move(ens));
        const double t = grid.time(k);
        parallel_for(particles, exec, [&](std::size_t i) {
            const auto col = static_cast<Eigen::Index>(i);
            const State x = current.col(col);
            if (eps > 0.0) {
                const Eigen::VectorXd w =
                    root_eps * detail::brownian_increment(seed, i, k, model.noise_rank(), dt);
                next.col(col) = detail::euler_step(model, t, dt, x, law, &w, k);
            } else {
                next.col(col) = detail::euler_step(model, t, dt, x, law, nullptr, k);
            }
        });
        current.swap(next);
    }
    on_node(grid.steps(), Ensemble(current));
}

}  // namespace

Trajectory simulate_limit(const ModelSpec& model, const State& x0, const TimeGrid& grid) {
    check_initial(model, x0);
    Trajectory traj{grid, Eigen::MatrixXd(x0.size(), static_cast<Eigen::Index>(grid.steps() + 1))};
    traj.states.col(0) = x0;
    State x = x0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const LawMoments law = moments(Ensemble::dirac(x), model.space);
        x = detail::euler_step(model, grid.time(k), grid.dt(), x, law, nullptr, k);
        traj.states.col(static_cast<Eigen::Index>(k + 1)) = x;
    }
    return traj;
}

ParticleRun simulate_particles(const ModelSpec& model, const State& x0, double eps,
                               std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                               const ExecPolicy& exec) {
    ParticleRun run{LawPath{grid, {}}};
    run.law.laws.reserve(grid.steps() + 1);
    run_particles(model, x0, eps, particles, grid, seed, exec,
                  [&](std::size_t, Ensemble ens) { run.law.laws.push_back(std::move(ens)); });
    return run;
}

Ensemble simulate_particles_terminal(const ModelSpec& model, const State& x0, double eps,
                                     std::size_t particles, const TimeGrid& grid,
                                     std::uint64_t seed, const ExecPolicy& exec) {
    Ensemble terminal = Ensemble::dirac(x0);
    run_particles(model, x0, eps, particles, grid, seed, exec, [&](std::size_t k, Ensemble ens) {
        if (k == grid.steps()) {
            terminal = std::move(ens);
        }
    });
    return terminal;
}

void simulate_particles_streaming(const ModelSpec& model, const State& x0, double eps,
                                  std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                                  const ExecPolicy& exec,
                                  const std::function<void(std::size_t, const Ensemble&)>& on_node) {
    run_particles(model, x0, eps, particles, grid, seed, exec,
                  [&](std::size_t k, Ensemble ens) { on_node(k, ens); });
}

std::vector<LawMoments> simulate_particle_moments(const ModelSpec& model, const State& x0, double eps,
                                                  std::size_t particles, const TimeGrid& grid,
                                                  std::uint64_t seed, const ExecPolicy& exec) {
    std::vector<LawMoments> out;
    out.reserve(grid.steps() + 1);
    run_particles(model, x0, eps, particles, grid, seed, exec,
                  [&](std::size_t, Ensemble ens) { out.push_back(moments(ens, model.space)); });
    return out;
}

Trajectory simulate_controlled(const ModelSpec& model, const State& x0, double eps,
                               const Control& control, const LawPath& law, const TimeGrid& grid,
                               std::uint64_t seed, std::uint64_t path_index) {
    require(law.grid == grid, "controlled: law path grid does not match");
    return simulate_controlled(model, x0, eps, control, law_moments(law, model.space), grid, seed,
                               path_index);
}

Trajectory simulate_controlled(const ModelSpec& model, const State& x0, double eps,
                               const Control& control, const std::vector<LawMoments>& law,
                               const TimeGrid& grid, std::uint64_t seed, std::uint64_t path_index) {
    check_initial(model, x0);
    require(eps >= 0.0 && std::isfinite(eps), "controlled: eps must be >= 0");
    require(control.grid() == grid, "controlled: control grid does not match");
    require(control.rank() == model.noise_rank(), "controlled: control rank must equal noise rank");
    require(law.size() == grid.steps() + 1, "controlled: law path must have steps + 1 nodes");
    const double dt = grid.dt();
    const double root_eps = std::sqrt(eps);
    Trajectory traj{grid, Eigen::MatrixXd(x0.size(), static_cast<Eigen::Index>(grid.steps() + 1))};
    traj.states.col(0) = x0;
    State x = x0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        Eigen::VectorXd w = control.at(k) * dt;
        if (eps > 0.0) {
            w += root_eps * detail::brownian_increment(seed, path_index, k, model.noise_rank(), dt);
        }
        x = detail::euler_step(model, grid.time(k), dt, x, law[k], &w, k);
        traj.states.col(static_cast<Eigen::Index>(k + 1)) = x;
    }
    return traj;
}

Trajectory solve_skeleton(const ModelSpec& model, const State& x0, const Control& control,
                          const Trajectory& limit, const TimeGrid& grid) {
    require(limit.grid == grid, "skeleton: limit path grid does not match");
    return simulate_controlled(model, x0, 0.0, control, dirac_path(limit), grid, 0, 0);
}

double time_increment_stat(const Trajectory& path, double delta, const SpaceSpec& space) {
    const double dt = path.grid.dt();
    const double ratio = delta / dt;
    const double k_real = std::round(ratio);
    require(delta > 0.0 && k_real >= 1.0 && std::abs(ratio - k_real) <= 1e-9 * std::max(1.0, ratio),
            "time_increment_stat: delta must be a positive multiple of dt");
    const auto k = static_cast<std::size_t>(k_real);
    double total = 0.0;
    for (std::size_t i = 0; i < path.grid.steps(); ++i) {
        const std::size_t anchor = (i / k) * k;
        total += h_norm_sq(path.state(i) - path.state(anchor), space);
    }
    return total * dt;
}

double sup_distance(const Trajectory& x, const Trajectory& y, const SpaceSpec& space) {
    require(x.states.cols() == y.states.cols() && x.states.rows() == y.states.rows(),
            "sup_distance: paths must share grid and dimension");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.states.cols(); ++i) {
        worst = std::max(worst, h_norm_sq(x.states.col(i) - y.states.col(i), space));
    }
    return std::sqrt(worst);
}

}  // namespace mvldp
