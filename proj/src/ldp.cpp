#include "mvldp/ldp.hpp"

#include "mvldp/random.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>

namespace mvldp {

RareEvent RareEvent::ball(State center, double radius) {
    require(std::isfinite(radius) && radius > 0.0, "ball event: radius must be positive");
    require(center.allFinite(), "ball event: center must be finite");
    return RareEvent(Kind::ball, std::move(center), radius);
}

RareEvent RareEvent::halfspace(State direction, double level, const SpaceSpec& space) {
    space.check_dim(direction.size(), "halfspace direction");
    require(std::abs(h_norm(direction, space) - 1.0) <= 1e-9, "halfspace event: direction must have unit H-norm");
    require(!std::isnan(level) && level != std::numeric_limits<double>::infinity(),
            "halfspace event: level must be finite or -inf");
    return RareEvent(Kind::halfspace, std::move(direction), level);
}

RareEvent RareEvent::whole_space(const SpaceSpec& space) {
    State w = default_channel_direction(space, 0);
    w /= h_norm(w, space);
    return RareEvent(Kind::halfspace, std::move(w), -std::numeric_limits<double>::infinity());
}

double RareEvent::distance(const State& x, const SpaceSpec& space) const {
    if (kind_ == Kind::ball) {
        return std::max(0.0, h_norm(State(x - vector_), space) - scalar_);
    }
    return std::max(0.0, scalar_ - h_inner(x, vector_, space));
}

State RareEvent::distance_sq_gradient(const State& x, const SpaceSpec& space) const {
    const double d = distance(x, space);
    if (d <= 0.0) {
        return State::Zero(x.size());
    }
    if (kind_ == Kind::ball) {
        const State diff = x - vector_;
        const double norm = h_norm(diff, space);
        return (2.0 * d / norm) * space.h_weights().cwiseProduct(diff);
    }
    return (-2.0 * d) * space.h_weights().cwiseProduct(vector_);
}

// ---------------------------------------------------------------------------

PenaltyObjective::PenaltyObjective(ModelSpec model, State x0, RareEvent event, TimeGrid grid)
    : model_(std::move(model)),
      x0_(std::move(x0)),
      event_(std::move(event)),
      grid_(grid),
      limit_(simulate_limit(model_, x0_, grid_)),
      frozen_law_(law_moments(dirac_path(limit_), model_.space)) {
    model_.space.check_dim(event_.center().size(), "event");
}

Trajectory PenaltyObjective::skeleton(const Control& control) const {
    return simulate_controlled(model_, x0_, 0.0, control, frozen_law_, grid_, 0, 0);
}

double PenaltyObjective::residual(const Control& control) const {
    return event_.distance(skeleton(control).terminal(), model_.space);
}

double PenaltyObjective::value(const Control& control, double penalty) const {
    const double d = residual(control);
    return action(control) + penalty * d * d;
}

Eigen::MatrixXd PenaltyObjective::gradient_adjoint(const Control& control, double penalty) const {
    const Trajectory path = skeleton(control);
    const double dt = grid_.dt();
    const std::size_t n = grid_.steps();
    Eigen::MatrixXd grad(static_cast<Eigen::Index>(n), control.rank());
    State lambda = penalty * event_.distance_sq_gradient(path.terminal(), model_.space);
    for (std::size_t k = n; k-- > 0;) {
        const double t = grid_.time(k);
        const State x = path.state(k);
        const LawMoments& law = frozen_law_[k];
        const Eigen::VectorXd w = control.at(k) * dt;
        const Eigen::VectorXd s = gains(model_, t, x, law);
        for (Eigen::Index j = 0; j < control.rank(); ++j) {
            const State& f = model_.channels[static_cast<std::size_t>(j)].direction;
            grad(static_cast<Eigen::Index>(k), j) = dt * (s[j] * f.dot(lambda) + control.values()(static_cast<Eigen::Index>(k), j));
        }
        State next = lambda + dt * drift_vjp(model_, t, x, law, lambda);
        if (!w.isZero(0.0)) {
            next += diffusion_vjp(model_, t, x, law, w, lambda);
        }
        lambda = std::move(next);
    }
    return grad;
}

Eigen::MatrixXd PenaltyObjective::gradient_fd(const Control& control, double penalty, double step) const {
    require(step > 0.0, "finite-difference step must be positive");
    Control probe = control;
    Eigen::MatrixXd grad(control.values().rows(), control.values().cols());
    for (Eigen::Index j = 0; j < grad.cols(); ++j) {
        for (Eigen::Index i = 0; i < grad.rows(); ++i) {
            const double base = control.values()(i, j);
            const double h = step * std::max(1.0, std::abs(base));
            probe.values()(i, j) = base + h;
            const double up = value(probe, penalty);
            probe.values()(i, j) = base - h;
            const double down = value(probe, penalty);
            probe.values()(i, j) = base;
            grad(i, j) = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------

namespace {

using Vec = Eigen::VectorXd;
using ValueFn = std::function<double(const Vec&)>;
using GradFn = std::function<Vec(const Vec&)>;

struct LbfgsResult {
    Vec x;
    double f = 0.0;
    int iterations = 0;
};

double safe_value(const ValueFn& f, const Vec& x) {
    try {
        return f(x);
    } catch (const BlowUp&) {
        return std::numeric_limits<double>::infinity();
    }
}

LbfgsResult lbfgs(const ValueFn& f, const GradFn& grad, Vec x, int max_iterations, int memory) {
    std::deque<Vec> s_hist;
    std::deque<Vec> y_hist;
    double fx = f(x);
    Vec g = grad(x);
    const double g0 = std::max(1.0, g.norm());
    int it = 0;
    int stalls = 0;
    while (it < max_iterations && g.norm() > 1e-10 * g0) {
        Vec q = g;
        const std::size_t m = s_hist.size();
        std::vector<double> alpha(m);
        for (std::size_t i = m; i-- > 0;) {
            alpha[i] = s_hist[i].dot(q) / y_hist[i].dot(s_hist[i]);
            q -= alpha[i] * y_hist[i];
        }
        if (m > 0) {
            q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        } else {
            q /= std::max(1.0, g.lpNorm<Eigen::Infinity>());
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double beta = y_hist[i].dot(q) / y_hist[i].dot(s_hist[i]);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Vec dir = -q;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            dir = -g;
            slope = -g.squaredNorm();
            s_hist.clear();
            y_hist.clear();
        }
        double step = 1.0;
        Vec trial;
        double ft = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            trial = x + step * dir;
            ft = safe_value(f, trial);
            if (ft <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++it;
        if (!accepted) {
            if (s_hist.empty()) {
                break;
            }
            s_hist.clear();
            y_hist.clear();
            continue;
        }
        const Vec gt = grad(trial);
        const Vec s = trial - x;
        const Vec y = gt - g;
        if (s.dot(y) > 1e-14 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        const double decrease = fx - ft;
        x = trial;
        g = gt;
        fx = ft;
        stalls = decrease <= 1e-15 * std::max(1.0, std::abs(fx)) ? stalls + 1 : 0;
        if (stalls >= 3) {
            break;
        }
    }
    return {x, fx, it};
}

}  // namespace

RateReport rate_minimize(const ModelSpec& model, const State& x0, const RareEvent& event,
                         const TimeGrid& grid, const RateOptions& options) {
    require(options.penalty_initial > 0.0 && options.penalty_growth > 1.0,
            "rate_minimize: penalty schedule must start positive and grow");
    require(options.max_stages >= 1 && options.max_iterations >= 1, "rate_minimize: iteration caps must be >= 1");
    require(options.tolerance > 0.0, "rate_minimize: tolerance must be positive");
    require(options.memory >= 1, "rate_minimize: L-BFGS memory must be >= 1");
    require(model.noise_rank() >= 1, "rate_minimize: model has no noise channels");

    const PenaltyObjective objective(model, x0, event, grid);
    const auto n = static_cast<Eigen::Index>(grid.steps());
    const Eigen::Index m = model.noise_rank();
    const bool constant = options.family == ControlFamily::constant;

    auto to_control = [&](const Vec& z) {
        if (constant) {
            return Control::constant(grid, z);
        }
        return Control(grid, Eigen::Map<const Eigen::MatrixXd>(z.data(), n, m));
    };

    double penalty = options.penalty_initial;
    const ValueFn value = [&](const Vec& z) { return objective.value(to_control(z), penalty); };
    const GradFn gradient = [&](const Vec& z) -> Vec {
        const Control c = to_control(z);
        if (options.gradient == GradientMode::adjoint) {
            const Eigen::MatrixXd g = objective.gradient_adjoint(c, penalty);
            if (constant) {
                return g.colwise().sum().transpose();
            }
            return Eigen::Map<const Vec>(g.data(), g.size());
        }
        if (!constant) {
            const Eigen::MatrixXd g = objective.gradient_fd(c, penalty, options.fd_step);
            return Eigen::Map<const Vec>(g.data(), g.size());
        }
        Vec g(z.size());
        Vec probe = z;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double h = options.fd_step * std::max(1.0, std::abs(z[i]));
            probe[i] = z[i] + h;
            const double up = value(probe);
            probe[i] = z[i] - h;
            const double down = value(probe);
            probe[i] = z[i];
            g[i] = (up - down) / (2.0 * h);
        }
        return g;
    };

    Vec z = Vec::Zero(constant ? m : n * m);
    RateReport report{to_control(z), std::numeric_limits<double>::infinity(), 0.0, State(), 0.0, 0, 0, 0.0, false};
    for (int stage = 0; stage < options.max_stages; ++stage) {
        const LbfgsResult res = lbfgs(value, gradient, z, options.max_iterations, options.memory);
        z = res.x;
        report.iterations += res.iterations;
        report.stages = stage + 1;
        report.penalty = penalty;
        const Control c = to_control(z);
        const Trajectory path = objective.skeleton(c);
        report.control = c;
        report.terminal = path.terminal();
        report.residual = event.distance(report.terminal, model.space);
        report.best_action = action(c);
        if (report.residual <= options.tolerance) {
            report.success = true;
            break;
        }
        penalty *= options.penalty_growth;
    }
    report.rate = report.success ? report.best_action : std::numeric_limits<double>::infinity();
    return report;
}

// ---------------------------------------------------------------------------

RareEstimate estimate_rare_prob(const ModelSpec& model, const State& x0, double eps,
                                const RareEvent& event, const TimeGrid& grid,
                                const RareEventOptions& options) {
    require(options.n_rep >= 1, "rare event: n_rep must be >= 1");
    require(options.ensemble_size >= 1, "rare event: ensemble size must be >= 1");
    require(std::isfinite(eps) && eps > 0.0, "rare event: eps must be positive");
    model.space.check_dim(event.center().size(), "event");

    RareEstimate est;
    std::vector<double> log_weights;  // log(h_i w_i); -inf for misses
    if (!options.tilt) {
        const std::size_t ens = std::min(options.ensemble_size, options.n_rep);
        const std::size_t replicas = (options.n_rep + ens - 1) / ens;
        for (std::size_t r = 0; r < replicas; ++r) {
            const Ensemble terminal = simulate_particles_terminal(
                model, x0, eps, ens, grid, rng::derive_seed(options.seed, "replica", r), options.exec);
            for (Eigen::Index i = 0; i < terminal.size(); ++i) {
                log_weights.push_back(event.contains(terminal.point(i), model.space)
                                          ? 0.0
                                          : -std::numeric_limits<double>::infinity());
            }
        }
    } else {
        const Control& tilt = *options.tilt;
        require(tilt.grid() == grid, "rare event: tilt grid does not match");
        require(tilt.rank() == model.noise_rank(), "rare event: tilt rank must equal noise rank");
        const std::vector<LawMoments> law = simulate_particle_moments(
            model, x0, eps, options.ensemble_size, grid, rng::derive_seed(options.seed, "law", 0),
            options.exec);
        const std::uint64_t noise_seed = rng::derive_seed(options.seed, "tilt", 0);
        const double dt = grid.dt();
        const double root_eps = std::sqrt(eps);
        const double quad = 0.5 * tilt.values().squaredNorm() * dt / eps;
        log_weights.assign(options.n_rep, 0.0);
        parallel_for(options.n_rep, options.exec, [&](std::size_t i) {
            const Trajectory path = simulate_controlled(model, x0, eps, tilt, law, grid, noise_seed, i);
            if (!event.contains(path.terminal(), model.space)) {
                log_weights[i] = -std::numeric_limits<double>::infinity();
                return;
            }
            double linear = 0.0;
            for (std::size_t k = 0; k < grid.steps(); ++k) {
                linear += tilt.at(k).dot(detail::brownian_increment(noise_seed, i, k, model.noise_rank(), dt));
            }
            log_weights[i] = -linear / root_eps - quad;
        });
    }

    const auto n = static_cast<double>(log_weights.size());
    est.samples = log_weights.size();
    est.hits = static_cast<std::size_t>(
        std::count_if(log_weights.begin(), log_weights.end(), [](double l) { return std::isfinite(l); }));
    if (est.hits == 0) {
        est.log_p_hat = -std::numeric_limits<double>::infinity();
        est.low_ess = true;
        return est;
    }
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    double s1 = 0.0;
    double s2 = 0.0;
    for (double l : log_weights) {
        if (std::isfinite(l)) {
            const double v = std::exp(l - top);
            s1 += v;
            s2 += v * v;
        }
    }
    const double mean_scaled = s1 / n;
    const double var_scaled = std::max(0.0, s2 / n - mean_scaled * mean_scaled);
    const double scale = std::exp(top);
    est.p_hat = std::min(1.0, scale * mean_scaled);
    if (!options.tilt && est.hits == est.samples) {
        est.p_hat = 1.0;
    }
    est.log_p_hat = top + std::log(mean_scaled);
    est.std_err = scale * std::sqrt(var_scaled / n);
    est.ess = s1 * s1 / s2;
    est.low_ess = est.ess < 10.0;
    return est;
}

// ---------------------------------------------------------------------------

void fit_log_slope(SlopeReport& report) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& row : report.rows) {
        if (row.parameter > 0.0 && row.statistic > 0.0) {
            xs.push_back(std::log(row.parameter));
            ys.push_back(std::log(row.statistic));
        }
    }
    report.slope = std::numeric_limits<double>::quiet_NaN();
    report.intercept = std::numeric_limits<double>::quiet_NaN();
    if (xs.size() < 2) {
        return;
    }
    const double k = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) {
        return;
    }
    report.slope = sxy / sxx;
    report.intercept = my - report.slope * mx;
}

namespace {

SlopeRow summarize(const std::vector<double>& samples, double parameter) {
    SlopeRow row{parameter, 0.0, 0.0};
    const auto n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double v : samples) {
        sum += v;
    }
    row.statistic = sum / n;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double v : samples) {
            ss += (v - row.statistic) * (v - row.statistic);
        }
        row.std_err = std::sqrt(ss / (n - 1.0) / n);
    }
    return row;
}

void check_eps_list(const std::vector<double>& eps_list) {
    require(!eps_list.empty(), "eps list must not be empty");
    for (double e : eps_list) {
        require(std::isfinite(e) && e >= 0.0, "eps values must be >= 0");
    }
}

}  // namespace

SlopeReport verify_l5(const ModelSpec& model, const State& x0, const std::vector<double>& eps_list,
                      std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                      const ExecPolicy& exec) {
    check_eps_list(eps_list);
    const Trajectory limit = simulate_limit(model, x0, grid);
    SlopeReport report{"l5", "eps", {}};
    for (double eps : eps_list) {
        std::vector<double> sup(particles, 0.0);
        simulate_particles_streaming(model, x0, eps, particles, grid, seed, exec,
                                     [&](std::size_t k, const Ensemble& ens) {
                                         const State ref = limit.state(k);
                                         for (Eigen::Index i = 0; i < ens.size(); ++i) {
                                             auto& s = sup[static_cast<std::size_t>(i)];
                                             s = std::max(s, h_norm_sq(ens.point(i) - ref, model.space));
                                         }
                                     });
        report.rows.push_back(summarize(sup, eps));
    }
    fit_log_slope(report);
    return report;
}

SlopeReport verify_t2(const ModelSpec& model, const State& x0, const Control& control,
                      const std::vector<double>& eps_list, std::size_t particles,
                      const TimeGrid& grid, std::uint64_t seed, const ExecPolicy& exec) {
    check_eps_list(eps_list);
    require(particles >= 1, "t2: N must be >= 1");
    const Trajectory skeleton = solve_skeleton(model, x0, control, simulate_limit(model, x0, grid), grid);
    SlopeReport report{"t2", "eps", {}};
    for (double eps : eps_list) {
        const std::vector<LawMoments> law = simulate_particle_moments(model, x0, eps, particles, grid, seed, exec);
        std::vector<double> sup(particles, 0.0);
        parallel_for(particles, exec, [&](std::size_t i) {
            const Trajectory path = simulate_controlled(model, x0, eps, control, law, grid, seed, i);
            const double d = sup_distance(path, skeleton, model.space);
            sup[i] = d * d;
        });
        report.rows.push_back(summarize(sup, eps));
    }
    fit_log_slope(report);
    return report;
}

SlopeReport verify_l6(const ModelSpec& model, const State& x0, const Control& control,
                      const std::vector<double>& delta_list, const TimeGrid& grid) {
    require(!delta_list.empty(), "delta list must not be empty");
    const Trajectory skeleton = solve_skeleton(model, x0, control, simulate_limit(model, x0, grid), grid);
    SlopeReport report{"l6", "delta", {}};
    for (double delta : delta_list) {
        report.rows.push_back({delta, time_increment_stat(skeleton, delta, model.space), 0.0});
    }
    fit_log_slope(report);
    return report;
}

ContinuityReport verify_t3(const ModelSpec& model, const State& x0, const Control& base_control,
                           double amplitude, const std::vector<double>& n_list,
                           const TimeGrid& grid) {
    require(!n_list.empty(), "frequency list must not be empty");
    require(std::isfinite(amplitude), "amplitude must be finite");
    const Trajectory limit = simulate_limit(model, x0, grid);
    const Trajectory base = solve_skeleton(model, x0, base_control, limit, grid);
    ContinuityReport report;
    for (double freq : n_list) {
        require(std::isfinite(freq) && freq >= 0.0, "frequencies must be >= 0");
        Control phi = Control::oscillatory(grid, Eigen::VectorXd::Zero(base_control.rank()), amplitude, freq);
        phi.values() += base_control.values();
        const Trajectory path = solve_skeleton(model, x0, phi, limit, grid);
        report.rows.push_back({freq, sup_distance(path, base, model.space), action(phi)});
    }
    return report;
}

AprioriReport apriori_bound(const ModelSpec& model, const State& x0, double radius_m,
                            std::size_t samples, const TimeGrid& grid, std::uint64_t seed) {
    require(std::isfinite(radius_m) && radius_m >= 0.0, "apriori: M must be >= 0");
    require(samples >= 1, "apriori: samples must be >= 1");
    require(model.noise_rank() >= 1, "apriori: model has no noise channels");
    const Trajectory limit = simulate_limit(model, x0, grid);
    double limit_sup = 0.0;
    for (Eigen::Index i = 0; i < limit.states.cols(); ++i) {
        limit_sup = std::max(limit_sup, h_norm_sq(limit.states.col(i), model.space));
    }
    const double rhs = 1.0 + h_norm_sq(x0, model.space) + limit_sup;
    const double alpha = model.alpha;
    AprioriReport report;
    rng::Stream stream(rng::derive_seed(seed, "apriori", 0));
    const auto n = static_cast<Eigen::Index>(grid.steps());
    for (std::size_t s = 0; s < samples; ++s) {
        Eigen::MatrixXd values(n, model.noise_rank());
        if (s == 0) {
            values.setOnes();
        } else {
            for (Eigen::Index j = 0; j < values.cols(); ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    values(i, j) = stream.normal();
                }
            }
        }
        const double energy = values.squaredNorm() * grid.dt();
        const double target = s == 0 ? radius_m : radius_m * stream.uniform();
        if (energy > 0.0) {
            values *= std::sqrt(target / energy);
        }
        const Control phi(grid, values);
        const Trajectory path = solve_skeleton(model, x0, phi, limit, grid);
        double sup = 0.0;
        double integral = 0.0;
        for (Eigen::Index i = 0; i < path.states.cols(); ++i) {
            sup = std::max(sup, h_norm_sq(path.states.col(i), model.space));
            if (i < n) {
                integral += std::pow(v_norm(path.states.col(i), model.space), alpha) * grid.dt();
            }
        }
        const double ratio = (sup + model.theta * integral) / rhs;
        report.ratios.push_back(ratio);
        report.sup_deviation.push_back(sup_distance(path, limit, model.space));
        report.constant = std::max(report.constant, ratio);
    }
    return report;
}

}  // namespace mvldp
