#pragma once

// Rate function for terminal events, rare-event Monte Carlo, and the
// numerical checks of the convergence statements behind the large deviation
// principle (noisy vs limit path, controlled vs skeleton path, continuity of
// the skeleton map under weakly converging controls, time increments).

#include "mvldp/dynamics.hpp"
#include "mvldp/models.hpp"
#include "mvldp/parallel.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mvldp {

/// Terminal-time event: a closed H-ball or a half-space {<x, w>_H >= level}.
class RareEvent {
public:
    enum class Kind { ball, halfspace };

    static RareEvent ball(State center, double radius);
    /// `direction` must have unit H-norm.
    static RareEvent halfspace(State direction, double level, const SpaceSpec& space);
    /// Half-space with level -infinity.
    static RareEvent whole_space(const SpaceSpec& space);

    Kind kind() const noexcept { return kind_; }
    const State& center() const noexcept { return vector_; }
    const State& direction() const noexcept { return vector_; }
    double radius() const noexcept { return scalar_; }
    double level() const noexcept { return scalar_; }

    /// H-distance from x to the event (0 inside).
    double distance(const State& x, const SpaceSpec& space) const;
    /// Coordinate gradient of distance(x)^2.
    State distance_sq_gradient(const State& x, const SpaceSpec& space) const;
    bool contains(const State& x, const SpaceSpec& space) const { return distance(x, space) <= 0.0; }

private:
    RareEvent(Kind kind, State v, double s) : kind_(kind), vector_(std::move(v)), scalar_(s) {}

    Kind kind_;
    State vector_;
    double scalar_;
};

enum class GradientMode { finite_difference, adjoint };
enum class ControlFamily { piecewise_constant, constant };

/// action(phi) + penalty * dist(skeleton terminal, event)^2 with the law frozen
/// at the Dirac path of the limit solution.
class PenaltyObjective {
public:
    PenaltyObjective(ModelSpec model, State x0, RareEvent event, TimeGrid grid);

    const Trajectory& limit() const noexcept { return limit_; }
    const ModelSpec& model() const noexcept { return model_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    const RareEvent& event() const noexcept { return event_; }

    Trajectory skeleton(const Control& control) const;
    double residual(const Control& control) const;
    double value(const Control& control, double penalty) const;
    /// Gradient with respect to the control values (steps x rank).
    Eigen::MatrixXd gradient_adjoint(const Control& control, double penalty) const;
    Eigen::MatrixXd gradient_fd(const Control& control, double penalty, double step) const;

private:
    ModelSpec model_;
    State x0_;
    RareEvent event_;
    TimeGrid grid_;
    Trajectory limit_;
    std::vector<LawMoments> frozen_law_;
};

struct RateOptions {
    double penalty_initial = 10.0;
    double penalty_growth = 10.0;
    int max_stages = 8;
    int max_iterations = 400;  // per penalty stage
    double tolerance = 1e-4;   // terminal H-distance to the event
    GradientMode gradient = GradientMode::finite_difference;
    double fd_step = 1e-6;
    ControlFamily family = ControlFamily::piecewise_constant;
    int memory = 10;  // L-BFGS history
};

struct RateReport {
    Control control;
    double rate = std::numeric_limits<double>::infinity();  // +inf when the event was not reached
    double best_action = 0.0;                               // action of the returned control
    State terminal;
    double residual = 0.0;
    int iterations = 0;
    int stages = 0;
    double penalty = 0.0;
    bool success = false;
};

RateReport rate_minimize(const ModelSpec& model, const State& x0, const RareEvent& event,
                         const TimeGrid& grid, const RateOptions& options = {});

struct RareEventOptions {
    std::size_t n_rep = 1000;
    std::size_t ensemble_size = 1000;  // particles per untilted replica / in the law run
    std::uint64_t seed = 1;
    ExecPolicy exec;
    std::optional<Control> tilt;
};

struct RareEstimate {
    double p_hat = 0.0;
    double log_p_hat = 0.0;
    double std_err = 0.0;
    double ess = 0.0;  // (sum h w)^2 / sum (h w)^2
    std::size_t samples = 0;
    std::size_t hits = 0;
    bool low_ess = false;  // ess < 10
};

/// Monte Carlo estimate of P(X^eps_T in event). Without a tilt the particle
/// system itself is sampled in replicas; with a tilt phi the paths follow the
/// controlled equation under a law path from a separate untilted run and are
/// reweighted by the Girsanov density.
RareEstimate estimate_rare_prob(const ModelSpec& model, const State& x0, double eps,
                                const RareEvent& event, const TimeGrid& grid,
                                const RareEventOptions& options);

struct SlopeRow {
    double parameter = 0.0;
    double statistic = 0.0;
    double std_err = 0.0;
};

struct SlopeReport {
    std::string experiment;
    std::string parameter_name;
    std::vector<SlopeRow> rows;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
};

/// Least-squares line through (log parameter, log statistic) over positive rows.
void fit_log_slope(SlopeReport& report);

/// E sup_t ||X^eps_t - X^0_t||_H^2 per eps (common random numbers across eps).
SlopeReport verify_l5(const ModelSpec& model, const State& x0, const std::vector<double>& eps_list,
                      std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                      const ExecPolicy& exec = {});

/// E sup_t ||X^{eps,phi}_t - Xbar^phi_t||_H^2 per eps; the controlled paths
/// consume the law path of an untilted run at the same eps and seed.
SlopeReport verify_t2(const ModelSpec& model, const State& x0, const Control& control,
                      const std::vector<double>& eps_list, std::size_t particles,
                      const TimeGrid& grid, std::uint64_t seed, const ExecPolicy& exec = {});

/// int ||Xbar_t - Xbar_{t(delta)}||_H^2 dt per delta for the skeleton path.
SlopeReport verify_l6(const ModelSpec& model, const State& x0, const Control& control,
                      const std::vector<double>& delta_list, const TimeGrid& grid);

struct ContinuityRow {
    double frequency = 0.0;
    double distance = 0.0;
    double action = 0.0;
};

struct ContinuityReport {
    std::vector<ContinuityRow> rows;
};

/// sup_t ||Xbar^{phi_n} - Xbar^{base}||_H for phi_n = base + c sin(2 pi n t) e_0.
ContinuityReport verify_t3(const ModelSpec& model, const State& x0, const Control& base_control,
                           double amplitude, const std::vector<double>& n_list,
                           const TimeGrid& grid);

struct AprioriReport {
    double constant = 0.0;  // max over samples of lhs / (1 + ||x||^2 + sup ||X^0||^2)
    std::vector<double> ratios;
    std::vector<double> sup_deviation;  // sup_t ||Xbar^phi - X^0||_H per sample
};

/// Empirical constant of the skeleton energy estimate
/// sup ||Xbar||^2 + theta int ||Xbar||_V^alpha <= C (1 + ||x||^2 + sup ||X^0||^2)
/// over random controls in S_M.
AprioriReport apriori_bound(const ModelSpec& model, const State& x0, double radius_m,
                            std::size_t samples, const TimeGrid& grid, std::uint64_t seed);

}  // namespace mvldp
