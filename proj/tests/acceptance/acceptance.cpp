// Acceptance suite: one PASS/FAIL line per primary criterion. Exits nonzero
// when any criterion fails.

#include "mvldp/commands.hpp"
#include "mvldp/config.hpp"
#include "mvldp/dynamics.hpp"
#include "mvldp/ldp.hpp"
#include "mvldp/measure.hpp"
#include "mvldp/models.hpp"
#include "mvldp/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

using namespace mvldp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_seconds > 0.0 && elapsed > budget_seconds) {
        out.pass = false;
        out.detail += " [over runtime budget]";
    }
    if (!out.pass) {
        ++failures;
    }
    std::printf("%s %2d  %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, title.c_str(), out.detail.c_str(), elapsed);
    std::fflush(stdout);
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

ModelSpec lin1d() { return make_mvsde(1, -1.0, 0.5, 1.0); }

State one() { return State::Ones(1); }

double brute_force_w2(const Ensemble& mu, const Ensemble& nu, const SpaceSpec& space) {
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
    return std::sqrt(best / static_cast<double>(mu.size()));
}

Ensemble random_ensemble(Eigen::Index d, Eigen::Index n, rng::Stream& rs) {
    Ensemble::Matrix m(d, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rs.normal();
    }
    return Ensemble(m);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const std::vector<double> kEpsList{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
const double kLqRate = 1.0 / (1.0 - std::exp(-2.0));

}  // namespace

int main() {
    criterion(1, "Limit-equation oracle", 1.0, [] {
        const double coarse = simulate_limit(lin1d(), one(), TimeGrid(1.0, 1000)).terminal()[0];
        const double fine = simulate_limit(lin1d(), one(), TimeGrid(1.0, 1000000)).terminal()[0];
        const double err = std::abs(coarse - std::exp(-0.5));
        const double err_ref = std::abs(coarse - fine);
        return Outcome{err <= 1e-4 && err_ref <= 1e-4,
                       "|X_1 - e^-0.5| = " + fmt(err) + ", vs dt=1e-6 reference " + fmt(err_ref)};
    });

    criterion(2, "Skeleton degeneracy", 0.0, [] {
        ModelSpec porous = make_porous_media(16, 4.0, 0.1);
        add_channels(porous, 1, 1.0);
        ModelSpec lap = make_p_laplace(64, 4.0, 0.1, 0.5, 0.25);
        add_channels(lap, 1, 1.0);
        struct Case {
            ModelSpec model;
            State x0;
            TimeGrid grid;
        };
        const std::vector<Case> cases{
            {lin1d(), one(), TimeGrid(1.0, 1000)},
            {porous, 0.5 / std::sqrt(2.0) * default_channel_direction(porous.space, 0), TimeGrid(0.1, 2000)},
            {lap, 0.1 / std::sqrt(2.0) * default_channel_direction(lap.space, 0), TimeGrid(0.01, 1000)}};
        std::string detail;
        bool ok = true;
        for (const auto& c : cases) {
            const Trajectory limit = simulate_limit(c.model, c.x0, c.grid);
            const Trajectory skel = solve_skeleton(c.model, c.x0, Control::zero(c.grid, c.model.noise_rank()), limit, c.grid);
            const bool same = skel.states == limit.states;
            ok = ok && same;
            detail += to_string(c.model.family) + (same ? " identical; " : " DIFFERS; ");
        }
        return Outcome{ok, detail};
    });

    criterion(3, "W2 exactness", 10.0, [] {
        rng::Stream rs(2024);
        int exact = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const Eigen::Index n = 1 + trial % 6;
            const Eigen::Index d = 1 + (trial / 6) % 3;
            const auto space = SpaceSpec::euclidean(d);
            const Ensemble mu = random_ensemble(d, n, rs);
            const Ensemble nu = random_ensemble(d, n, rs);
            exact += w2_assignment(mu, nu, space) == brute_force_w2(mu, nu, space);
        }
        double worst = 0.0;
        const auto r1 = SpaceSpec::euclidean(1);
        for (int trial = 0; trial < 200; ++trial) {
            const Eigen::Index n = 1 + trial % 64;
            const Ensemble mu = random_ensemble(1, n, rs);
            const Ensemble nu = random_ensemble(1, n, rs);
            worst = std::max(worst, std::abs(w2_sorted(mu, nu, r1) - w2_assignment(mu, nu, r1)));
        }
        return Outcome{exact == 200 && worst <= 1e-12,
                       std::to_string(exact) + "/200 exact, max 1D gap " + fmt(worst)};
    });

    criterion(4, "Hypothesis audit", 0.0, [] {
        AuditOptions opts;
        opts.trials = 500;
        std::string detail;
        bool ok = true;
        for (const auto& m : {make_porous_media(16, 4.0, 0.1), make_p_laplace(64, 4.0, 0.1, 0.5, 0.25)}) {
            const AuditReport r = audit_hypotheses(m, opts);
            for (const char* h : {"H2", "H3", "H4"}) {
                const auto& res = r.at(h);
                ok = ok && res.pass && res.defect <= 1e-6;
                detail += to_string(m.family) + " " + h + " defect " + fmt(res.defect) + "; ";
            }
        }
        const AuditReport bad = audit_hypotheses(make_p_laplace(64, 4.0, 0.1, 1e3, 0.25), opts);
        const bool flagged = !bad.at("H3").pass;
        detail += std::string("c1=1e3 H3 ") + (flagged ? "FAIL as expected" : "not flagged") + " (C=" + fmt(bad.at("H3").constant) + ")";
        return Outcome{ok && flagged, detail};
    });

    criterion(5, "Time-increment scaling (l5)", 60.0, [] {
        const SlopeReport r = verify_l5(lin1d(), one(), kEpsList, 2000, TimeGrid(1.0, 100), 5);
        return Outcome{r.slope >= 0.85 && r.slope <= 1.15, "slope " + fmt(r.slope)};
    });

    criterion(6, "Controlled-path scaling (t2)", 60.0, [] {
        const TimeGrid g(1.0, 100);
        const SlopeReport r = verify_t2(lin1d(), one(), Control::constant(g, Eigen::VectorXd::Ones(1)), kEpsList, 2000, g, 6);
        return Outcome{r.slope >= 0.85 && r.slope <= 1.15, "slope " + fmt(r.slope)};
    });

    criterion(7, "Oscillatory-control continuity (t3)", 0.0, [] {
        const TimeGrid g(1.0, 1000);
        const ContinuityReport r = verify_t3(lin1d(), one(), Control::zero(g, 1), 1.0, {4, 8, 16, 32, 64}, g);
        const double d4 = r.rows.front().distance;
        const double d64 = r.rows.back().distance;
        return Outcome{d64 <= 0.02 && d64 <= d4 / 4.0, "d_4 = " + fmt(d4) + ", d_64 = " + fmt(d64)};
    });

    criterion(8, "Rate-function oracle", 30.0, [] {
        const TimeGrid g(1.0, 100);
        const Trajectory limit = simulate_limit(lin1d(), one(), g);
        const RareEvent event = RareEvent::ball(State::Constant(1, limit.terminal()[0] + 1.0), 1e-3);
        const RateReport r = rate_minimize(lin1d(), one(), event, g);
        double gram = 0.0;
        for (std::size_t k = 0; k < g.steps(); ++k) {
            gram += std::pow(1.0 - g.dt(), 2.0 * static_cast<double>(g.steps() - 1 - k)) * g.dt();
        }
        const double qp = std::pow(1.0 - 1e-3, 2) / (2.0 * gram);
        const double rel_lq = std::abs(r.rate - kLqRate) / kLqRate;
        const double rel_qp = std::abs(r.rate - qp) / qp;

        const PenaltyObjective obj(lin1d(), one(), event, g);
        rng::Stream rs(8);
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            Eigen::MatrixXd v(100, 1);
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                v(i) = 2.0 * rs.normal();
            }
            const Control c(g, v);
            const Eigen::MatrixXd adj = obj.gradient_adjoint(c, 1e3);
            const Eigen::MatrixXd fd = obj.gradient_fd(c, 1e3, 1e-6);
            worst = std::max(worst, (adj - fd).norm() / fd.norm());
        }
        return Outcome{r.success && rel_lq <= 0.02 && rel_qp <= 0.02 && worst <= 1e-4,
                       "I* = " + fmt(r.rate) + " (LQ " + fmt(kLqRate) + ", rel " + fmt(rel_lq) + "; discrete QP " +
                           fmt(qp) + ", rel " + fmt(rel_qp) + "); adjoint vs FD max rel " + fmt(worst)};
    });

    criterion(9, "LDP consistency", 120.0, [] {
        const TimeGrid g(1.0, 100);
        const Trajectory limit = simulate_limit(lin1d(), one(), g);
        const RareEvent event = RareEvent::ball(State::Constant(1, limit.terminal()[0] + 1.0), 1e-3);
        const RateReport rate = rate_minimize(lin1d(), one(), event, g);
        RareEventOptions opts;
        opts.n_rep = 10000;
        opts.seed = 9;
        opts.tilt = rate.control;
        const double eps = 0.01;
        const RareEstimate est = estimate_rare_prob(lin1d(), one(), eps, event, g, opts);
        const double scaled = -eps * est.log_p_hat;
        const double rel = std::abs(scaled - rate.rate) / rate.rate;
        return Outcome{rate.success && rel <= 0.15,
                       "-eps log p_hat = " + fmt(scaled) + " vs I* = " + fmt(rate.rate) + " (rel " + fmt(rel) +
                           ", ESS " + fmt(est.ess) + ")"};
    });

    criterion(10, "Determinism", 0.0, [] {
        const fs::path root = fs::temp_directory_path() / "mvldp_acceptance_determinism";
        fs::remove_all(root);
        const ExperimentConfig lin = parse_config(
            "[model]\nfamily = mvsde\nx0 = 1\n[grid]\nT = 1\nsteps = 100\n"
            "[run]\neps = 0.05\nparticles = 64\nn_rep = 2000\nensemble_size = 200\nevent_offset = 0.5\n"
            "event_radius = 0.05\ncontrol = sinusoid\ncontrol_value = 0.5\ncontrol_amplitude = 1\n"
            "control_frequency = 3\nseed = 10\n");
        const ExperimentConfig verify = parse_config(
            "[model]\nfamily = mvsde\nx0 = 1\n[grid]\nT = 1\nsteps = 128\n"
            "[run]\neps = 0.1,0.01\nparticles = 64\ncontrol = constant\ncontrol_value = 1\ntrials = 50\nseed = 10\n");
        const ExperimentConfig spde = parse_config(
            "[model]\nfamily = p_laplace\nx0 = 0.1\nx0_profile = sine\n[space]\nnodes = 32\np = 3\n"
            "[grid]\nT = 0.01\nsteps = 200\n[run]\neps = 0.01\nparticles = 16\nseed = 10\n");
        using Cmd = std::function<int(const cli::RunOptions&)>;
        const std::vector<std::pair<std::string, Cmd>> commands{
            {"limit", [&](const cli::RunOptions& o) { return cli::cmd_limit(lin, o); }},
            {"simulate", [&](const cli::RunOptions& o) { return cli::cmd_simulate(lin, o); }},
            {"simulate_spde", [&](const cli::RunOptions& o) { return cli::cmd_simulate(spde, o); }},
            {"skeleton", [&](const cli::RunOptions& o) { return cli::cmd_skeleton(lin, o); }},
            {"rate_min", [&](const cli::RunOptions& o) { return cli::cmd_rate_min(lin, o); }},
            {"rare_event", [&](const cli::RunOptions& o) { return cli::cmd_rare_event(lin, o); }},
            {"verify_l5", [&](const cli::RunOptions& o) { return cli::cmd_verify(verify, "l5", o); }},
            {"verify_t2", [&](const cli::RunOptions& o) { return cli::cmd_verify(verify, "t2", o); }},
            {"verify_t3", [&](const cli::RunOptions& o) { return cli::cmd_verify(verify, "t3", o); }},
            {"verify_l6", [&](const cli::RunOptions& o) { return cli::cmd_verify(verify, "l6", o); }},
            {"verify_hypo", [&](const cli::RunOptions& o) { return cli::cmd_verify(verify, "hypo", o); }},
        };
        int compared = 0;
        std::string mismatch;
        for (const auto& [name, cmd] : commands) {
            std::vector<fs::path> dirs;
            for (int threads : {1, 4, 1}) {
                cli::RunOptions o;
                o.exec.threads = threads;
                o.out_dir = root / (name + "_" + std::to_string(dirs.size()));
                if (cmd(o) != 0) {
                    return Outcome{false, name + " failed"};
                }
                dirs.push_back(o.out_dir);
            }
            for (const auto& entry : fs::directory_iterator(dirs[0])) {
                const auto file = entry.path().filename();
                for (std::size_t k = 1; k < dirs.size(); ++k) {
                    ++compared;
                    if (read_file(dirs[0] / file) != read_file(dirs[k] / file)) {
                        mismatch += name + "/" + file.string() + " ";
                    }
                }
            }
        }
        fs::remove_all(root);
        return Outcome{mismatch.empty(), std::to_string(compared) + " file comparisons across 1/4/1 workers" +
                                             (mismatch.empty() ? ", all byte-identical" : ", differ: " + mismatch)};
    });

    criterion(11, "SPDE smoke + energy bound", 240.0, [] {
        const double bound = 1.0;
        ModelSpec porous = make_porous_media(16, 4.0, 0.1);
        add_channels(porous, 1, 1.0);
        ModelSpec lap = make_p_laplace(64, 4.0, 0.1, 0.5, 0.25);
        add_channels(lap, 1, 1.0);
        struct Case {
            ModelSpec model;
            State x0;
            TimeGrid grid;
        };
        const std::vector<Case> cases{
            {porous, 0.5 / std::sqrt(2.0) * default_channel_direction(porous.space, 0), TimeGrid(0.1, 2000)},
            {lap, 0.5 / std::sqrt(2.0) * default_channel_direction(lap.space, 0), TimeGrid(0.1, 20000)}};
        std::string detail;
        bool ok = true;
        for (const auto& c : cases) {
            const auto start = std::chrono::steady_clock::now();
            double energy = 0.0;
            simulate_particles_streaming(c.model, c.x0, 0.01, 200, c.grid, 11, ExecPolicy{1},
                                         [&](std::size_t, const Ensemble& ens) {
                                             for (Eigen::Index i = 0; i < ens.size(); ++i) {
                                                 energy = std::max(energy, h_norm_sq(ens.point(i), c.model.space));
                                             }
                                         });
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            ok = ok && energy <= bound && secs < 120.0;
            detail += to_string(c.model.family) + " sup energy " + fmt(energy) + " <= " + fmt(bound) + " in " +
                      fmt(secs) + " s; ";
        }
        return Outcome{ok, detail};
    });

    std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
