#include "mvldp/commands.hpp"

#include "mvldp/io.hpp"
#include "mvldp/ldp.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>

namespace mvldp::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json number(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return io::format_number(v);
}

json vector_json(const State& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(number(v[i]));
    }
    return arr;
}

fs::path prepare(const RunOptions& options) {
    fs::create_directories(options.out_dir);
    return options.out_dir;
}

void write_summary(const fs::path& dir, const std::vector<json>& rows) {
    std::vector<std::string> lines;
    lines.reserve(rows.size());
    for (const auto& row : rows) {
        lines.push_back(row.dump());
    }
    io::write_lines(dir / "summary.jsonl", lines);
}

double single_eps(const ExperimentConfig& config) {
    require(config.eps.size() == 1, "run.eps must hold exactly one value for this command");
    return config.eps.front();
}

std::string bool_cell(bool b) { return b ? "1" : "0"; }

}  // namespace

std::string provenance(const ExperimentConfig& config) {
    return std::string("mvldp ") + kVersion + " config_sha256=" + config_sha256(config);
}

int cmd_limit(const ExperimentConfig& config, const RunOptions& options) {
    const Trajectory path = simulate_limit(config.model, config.x0, config.grid);
    const fs::path dir = prepare(options);
    io::trajectory_table(provenance(config), path).write(dir / "limit.csv");
    write_summary(dir, {json{{"experiment", "limit"},
                             {"T", config.grid.horizon()},
                             {"steps", config.grid.steps()},
                             {"terminal", vector_json(path.terminal())},
                             {"terminal_h_norm", number(h_norm(path.terminal(), config.model.space))}}});
    return exit_ok;
}

int cmd_simulate(const ExperimentConfig& config, const RunOptions& options) {
    const double eps = single_eps(config);
    const SpaceSpec& space = config.model.space;
    const Eigen::Index d = config.model.dim();
    const std::size_t n = config.particles;
    const std::size_t recorded = config.record_particles == 0 ? n : std::min(n, config.record_particles);
    const std::size_t stride = config.record_stride;
    const std::string prov = provenance(config);

    std::vector<std::string> pcols{"t", "particle"};
    std::vector<std::string> lcols{"t"};
    for (Eigen::Index j = 0; j < d; ++j) {
        pcols.push_back("x_" + std::to_string(j));
        lcols.push_back("mean_" + std::to_string(j));
    }
    lcols.insert(lcols.end(), {"second_moment", "variance", "max_energy"});
    io::CsvTable particles(prov, pcols);
    io::CsvTable law(prov, lcols);

    double max_energy = 0.0;
    LawMoments terminal;
    simulate_particles_streaming(
        config.model, config.x0, eps, n, config.grid, config.seed, options.exec,
        [&](std::size_t k, const Ensemble& ens) {
            double node_energy = 0.0;
            for (Eigen::Index i = 0; i < ens.size(); ++i) {
                node_energy = std::max(node_energy, h_norm_sq(ens.point(i), space));
            }
            max_energy = std::max(max_energy, node_energy);
            const LawMoments mom = moments(ens, space);
            if (k == config.grid.steps()) {
                terminal = mom;
            }
            if (k % stride != 0 && k != config.grid.steps()) {
                return;
            }
            const double t = config.grid.time(k);
            std::vector<double> row{t};
            for (Eigen::Index j = 0; j < d; ++j) {
                row.push_back(mom.mean[j]);
            }
            row.push_back(mom.second_moment);
            row.push_back(mom.second_moment - h_norm_sq(mom.mean, space));
            row.push_back(node_energy);
            law.add_row(row);
            for (std::size_t i = 0; i < recorded; ++i) {
                std::vector<double> prow{t, static_cast<double>(i)};
                const auto x = ens.point(static_cast<Eigen::Index>(i));
                for (Eigen::Index j = 0; j < d; ++j) {
                    prow.push_back(x[j]);
                }
                particles.add_row(prow);
            }
        });

    json summary{{"experiment", "simulate"},
                 {"eps", eps},
                 {"particles", n},
                 {"max_energy", number(max_energy)},
                 {"terminal_second_moment", number(terminal.second_moment)},
                 {"terminal_variance", number(terminal.second_moment - h_norm_sq(terminal.mean, space))}};
    const ModelSpec& m = config.model;
    bool additive = m.family == ModelFamily::mvsde && m.hoelder_gamma == 0.0;
    for (const auto& ch : m.channels) {
        additive = additive && ch.beta1 == 0.0 && ch.beta2 == 0.0;
    }
    if (additive) {
        double noise = 0.0;
        for (const auto& ch : m.channels) {
            noise += ch.beta0 * ch.beta0 * h_norm_sq(ch.direction, space);
        }
        const double horizon = config.grid.horizon();
        const double growth = m.a == 0.0 ? horizon : std::expm1(2.0 * m.a * horizon) / (2.0 * m.a);
        summary["ou_variance_theory"] = number((1.0 - 1.0 / static_cast<double>(n)) * eps * noise * growth);
    }
    if (config.energy_bound) {
        summary["energy_bound"] = *config.energy_bound;
        summary["energy_bound_ok"] = max_energy <= *config.energy_bound;
    }

    const fs::path dir = prepare(options);
    particles.write(dir / "particles.csv");
    law.write(dir / "law.csv");
    write_summary(dir, {summary});
    if (config.energy_bound && max_energy > *config.energy_bound) {
        throw BlowUp("sup energy " + io::format_number(max_energy) + " exceeds run.energy_bound", config.grid.steps());
    }
    return exit_ok;
}

int cmd_skeleton(const ExperimentConfig& config, const RunOptions& options) {
    const Control control = build_control(config);
    const Trajectory limit = simulate_limit(config.model, config.x0, config.grid);
    const Trajectory path = solve_skeleton(config.model, config.x0, control, limit, config.grid);
    const fs::path dir = prepare(options);
    io::trajectory_table(provenance(config), path).write(dir / "skeleton.csv");
    write_summary(dir, {json{{"experiment", "skeleton"},
                             {"action", number(action(control))},
                             {"terminal", vector_json(path.terminal())},
                             {"sup_distance_to_limit", number(sup_distance(path, limit, config.model.space))}}});
    return exit_ok;
}

int cmd_rate_min(const ExperimentConfig& config, const RunOptions& options) {
    const Trajectory limit = simulate_limit(config.model, config.x0, config.grid);
    const RareEvent event = build_event(config, limit.terminal());
    const RateReport report = rate_minimize(config.model, config.x0, event, config.grid, config.rate);
    const fs::path dir = prepare(options);
    const std::string prov = provenance(config);
    io::control_table(prov, report.control).write(dir / "control.csv");
    io::CsvTable table(prov, {"rate", "action", "residual", "iterations", "stages", "penalty", "success"});
    table.add_row({io::format_number(report.rate), io::format_number(report.best_action),
                   io::format_number(report.residual), std::to_string(report.iterations),
                   std::to_string(report.stages), io::format_number(report.penalty), bool_cell(report.success)});
    table.write(dir / "rate.csv");
    write_summary(dir, {json{{"experiment", "rate_min"},
                             {"rate", number(report.rate)},
                             {"action", number(report.best_action)},
                             {"residual", number(report.residual)},
                             {"iterations", report.iterations},
                             {"stages", report.stages},
                             {"penalty", number(report.penalty)},
                             {"success", report.success},
                             {"terminal", vector_json(report.terminal)}}});
    return report.success ? exit_ok : exit_optimizer;
}

int cmd_rare_event(const ExperimentConfig& config, const RunOptions& options) {
    const double eps = single_eps(config);
    const Trajectory limit = simulate_limit(config.model, config.x0, config.grid);
    const RareEvent event = build_event(config, limit.terminal());
    RareEventOptions opts;
    opts.n_rep = config.n_rep;
    opts.ensemble_size = config.ensemble_size;
    opts.seed = config.seed;
    opts.exec = options.exec;
    if (!config.tilt_file.empty()) {
        opts.tilt = read_control_csv(config.tilt_file, config.grid, config.model.noise_rank());
    }
    const RareEstimate est = estimate_rare_prob(config.model, config.x0, eps, event, config.grid, opts);
    const double scaled = -eps * est.log_p_hat;
    const fs::path dir = prepare(options);
    io::CsvTable table(provenance(config), {"eps", "n_rep", "samples", "hits", "p_hat", "log_p_hat", "std_err",
                                            "ess", "neg_eps_log_p", "tilted", "low_ess"});
    table.add_row({io::format_number(eps), std::to_string(config.n_rep), std::to_string(est.samples),
                   std::to_string(est.hits), io::format_number(est.p_hat), io::format_number(est.log_p_hat),
                   io::format_number(est.std_err), io::format_number(est.ess), io::format_number(scaled),
                   bool_cell(opts.tilt.has_value()), bool_cell(est.low_ess)});
    table.write(dir / "rare_event.csv");
    json row{{"experiment", "rare_event"},
             {"eps", eps},
             {"samples", est.samples},
             {"hits", est.hits},
             {"p_hat", number(est.p_hat)},
             {"log_p_hat", number(est.log_p_hat)},
             {"std_err", number(est.std_err)},
             {"ess", number(est.ess)},
             {"neg_eps_log_p", number(scaled)},
             {"tilted", opts.tilt.has_value()},
             {"low_ess", est.low_ess}};
    if (est.low_ess) {
        row["warning"] = "effective sample size below 10";
    }
    write_summary(dir, {row});
    return exit_ok;
}

int cmd_verify(const ExperimentConfig& config, const std::string& which, const RunOptions& options) {
    const std::string prov = provenance(config);
    std::vector<json> summary;
    std::optional<io::CsvTable> table;

    if (which == "l5" || which == "t2" || which == "l6") {
        SlopeReport report;
        if (which == "l5") {
            report = verify_l5(config.model, config.x0, config.eps, config.particles, config.grid, config.seed,
                               options.exec);
        } else if (which == "t2") {
            report = verify_t2(config.model, config.x0, build_control(config), config.eps, config.particles,
                               config.grid, config.seed, options.exec);
        } else {
            report = verify_l6(config.model, config.x0, build_control(config), config.delta, config.grid);
        }
        table.emplace(prov, std::vector<std::string>{"experiment", report.parameter_name, "statistic", "std_err",
                                                     "slope", "intercept"});
        for (const auto& row : report.rows) {
            table->add_row({report.experiment, io::format_number(row.parameter), io::format_number(row.statistic),
                            io::format_number(row.std_err), io::format_number(report.slope),
                            io::format_number(report.intercept)});
            summary.push_back(json{{"experiment", report.experiment},
                                   {report.parameter_name, number(row.parameter)},
                                   {"statistic", number(row.statistic)},
                                   {"std_err", number(row.std_err)}});
        }
        summary.push_back(json{{"experiment", report.experiment},
                               {"slope", number(report.slope)},
                               {"intercept", number(report.intercept)}});
    } else if (which == "t3") {
        const ContinuityReport report = verify_t3(config.model, config.x0, build_control(config), config.amplitude,
                                                  config.frequencies, config.grid);
        table.emplace(prov, std::vector<std::string>{"experiment", "n", "distance", "action", "amplitude"});
        for (const auto& row : report.rows) {
            table->add_row({"t3", io::format_number(row.frequency), io::format_number(row.distance),
                            io::format_number(row.action), io::format_number(config.amplitude)});
            summary.push_back(json{{"experiment", "t3"},
                                   {"n", number(row.frequency)},
                                   {"distance", number(row.distance)},
                                   {"action", number(row.action)}});
        }
    } else if (which == "hypo") {
        const AuditReport report = audit_hypotheses(config.model, config.audit);
        table.emplace(prov, std::vector<std::string>{"experiment", "hypothesis", "constant", "defect", "pass"});
        for (const auto& r : report.results) {
            table->add_row({"hypo", r.name, io::format_number(r.constant), io::format_number(r.defect), bool_cell(r.pass)});
            summary.push_back(json{{"experiment", "hypo"},
                                   {"hypothesis", r.name},
                                   {"constant", number(r.constant)},
                                   {"defect", number(r.defect)},
                                   {"pass", r.pass}});
        }
    } else {
        throw InvalidInput("verify: --which must be one of l5, l6, t2, t3, hypo");
    }

    const fs::path dir = prepare(options);
    table->write(dir / ("verify_" + which + ".csv"));
    write_summary(dir, summary);
    return exit_ok;
}

int run(const std::string& command, const fs::path& config_path, const RunOptions& options,
        std::optional<std::uint64_t> seed, const std::string& which, std::ostream& err) {
    try {
        require(options.exec.threads >= 1, "threads must be >= 1");
        ExperimentConfig config = load_config(config_path);
        if (seed) {
            override_seed(config, *seed);
        }
        if (command == "limit") {
            return cmd_limit(config, options);
        }
        if (command == "simulate") {
            return cmd_simulate(config, options);
        }
        if (command == "skeleton") {
            return cmd_skeleton(config, options);
        }
        if (command == "rate_min") {
            const int code = cmd_rate_min(config, options);
            if (code == exit_optimizer) {
                err << "mvldp: optimizer did not reach the event; rate reported as inf\n";
            }
            return code;
        }
        if (command == "rare_event") {
            return cmd_rare_event(config, options);
        }
        if (command == "verify") {
            require(!which.empty(), "verify needs --which");
            return cmd_verify(config, which, options);
        }
        throw InvalidInput("unknown command '" + command + "'");
    } catch (const InvalidInput& e) {
        err << "mvldp: invalid input: " << e.what() << '\n';
        return exit_validation;
    } catch (const BlowUp& e) {
        err << "mvldp: numerical blow-up: " << e.what() << '\n';
        return exit_blow_up;
    } catch (const std::exception& e) {
        err << "mvldp: error: " << e.what() << '\n';
        return exit_failure;
    }
}

}  // namespace mvldp::cli
