#include "mvldp/config.hpp"

#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace mvldp {

namespace {

namespace pt = boost::property_tree;
using nlohmann::json;

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    if (s == "inf" || s == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const char* begin = s.data();
    if (!s.empty() && s.front() == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw InvalidInput("config: '" + key + "' is not a number: '" + raw + "'");
    }
    return v;
}

std::uint64_t to_unsigned(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw InvalidInput("config: '" + key + "' is not a non-negative integer: '" + raw + "'");
    }
    return v;
}

std::vector<double> to_list(const std::string& raw, const std::string& key) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) {
        out.push_back(to_double(item, key));
    }
    if (out.empty()) {
        throw InvalidInput("config: '" + key + "' must list at least one number");
    }
    return out;
}

/// One INI section; every lookup is recorded in the resolved JSON.
class Section {
public:
    Section(const pt::ptree* tree, std::string name, json& resolved)
        : tree_(tree), name_(std::move(name)), resolved_(resolved[name_]) {
        resolved_ = json::object();
    }

    void allow(std::set<std::string> keys) {
        if (tree_ == nullptr) {
            return;
        }
        for (const auto& [key, child] : *tree_) {
            if (keys.count(key) == 0) {
                throw InvalidInput("config: unknown key '" + key + "' in [" + name_ + "]");
            }
            if (!child.empty()) {
                throw InvalidInput("config: nested key '" + key + "' in [" + name_ + "]");
            }
        }
    }

    bool has(const std::string& key) const {
        return tree_ != nullptr && tree_->find(key) != tree_->not_found();
    }

    std::string raw(const std::string& key) const { return tree_->get<std::string>(key); }

    std::string qualified(const std::string& key) const { return name_ + "." + key; }

    std::string text(const std::string& key, const std::string& fallback) {
        const std::string v = has(key) ? trim(raw(key)) : fallback;
        resolved_[key] = v;
        return v;
    }

    double number(const std::string& key, double fallback) {
        const double v = has(key) ? to_double(raw(key), qualified(key)) : fallback;
        record(key, v);
        return v;
    }

    std::optional<double> optional_number(const std::string& key) {
        if (!has(key)) {
            resolved_[key] = nullptr;
            return std::nullopt;
        }
        const double v = to_double(raw(key), qualified(key));
        record(key, v);
        return v;
    }

    std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
        const std::uint64_t v = has(key) ? to_unsigned(raw(key), qualified(key)) : fallback;
        resolved_[key] = v;
        return v;
    }

    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
        const std::vector<double> v = has(key) ? to_list(raw(key), qualified(key)) : fallback;
        json arr = json::array();
        for (double x : v) {
            arr.push_back(encode(x));
        }
        resolved_[key] = arr;
        return v;
    }

private:
    static json encode(double v) {
        if (std::isinf(v)) {
            return v > 0 ? "inf" : "-inf";
        }
        return v;
    }

    void record(const std::string& key, double v) { resolved_[key] = encode(v); }

    const pt::ptree* tree_;
    std::string name_;
    json& resolved_;
};

const pt::ptree* find_section(const pt::ptree& root, const std::string& name) {
    const auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
}

void require_positive(double v, const std::string& what) {
    require(std::isfinite(v) && v > 0.0, "config: " + what + " must be positive");
}

std::size_t positive_size(Section& sec, const std::string& key, std::uint64_t fallback) {
    const std::uint64_t v = sec.integer(key, fallback);
    require(v >= 1, "config: " + sec.qualified(key) + " must be >= 1");
    return static_cast<std::size_t>(v);
}

State resolve_x0(const SpaceSpec& space, const std::vector<double>& values, const std::string& profile) {
    const Eigen::Index d = space.dim();
    if (profile == "sine") {
        require(values.size() == 1, "config: model.x0 must be a single amplitude for x0_profile = sine");
        if (space.kind() == SpaceKind::euclidean) {
            return State::Constant(d, values[0]);
        }
        return values[0] / std::sqrt(2.0) * default_channel_direction(space, 0);
    }
    require(profile == "coordinates", "config: model.x0_profile must be 'coordinates' or 'sine'");
    if (values.size() == 1) {
        return State::Constant(d, values[0]);
    }
    require(static_cast<Eigen::Index>(values.size()) == d,
            "config: model.x0 must hold 1 or dim = " + std::to_string(d) + " values");
    return Eigen::Map<const State>(values.data(), d);
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

ExperimentConfig from_tree(const pt::ptree& root, const std::filesystem::path& base_dir) {
    static const std::set<std::string> sections{"model", "space", "grid", "run"};
    for (const auto& [key, child] : root) {
        if (sections.count(key) == 0) {
            throw InvalidInput("config: unknown section or top-level key '" + key + "'");
        }
        if (child.empty() && !child.data().empty()) {
            throw InvalidInput("config: key '" + key + "' outside a section");
        }
    }
    json resolved = json::object();
    ExperimentConfig cfg;

    // [model] and [space]
    Section model(find_section(root, "model"), "model", resolved);
    require(model.has("family"), "config: model.family is required");
    const ModelFamily family = parse_family(model.text("family", ""));
    std::set<std::string> model_keys{"family", "sigma", "beta1", "beta2", "noise_rank", "hoelder_gamma",
                                     "theta", "x0", "x0_profile"};
    Section space(find_section(root, "space"), "space", resolved);
    switch (family) {
    case ModelFamily::mvsde: {
        model_keys.insert({"a", "b_mean"});
        model.allow(model_keys);
        space.allow({"dim"});
        const auto dim = static_cast<Eigen::Index>(positive_size(space, "dim", 1));
        cfg.model = make_mvsde(dim, model.number("a", -1.0), model.number("b_mean", 0.5), 0.0);
        cfg.model.channels.clear();
        break;
    }
    case ModelFamily::porous_media: {
        model_keys.insert("kappa");
        model.allow(model_keys);
        space.allow({"modes", "r"});
        const auto modes = static_cast<Eigen::Index>(positive_size(space, "modes", 16));
        cfg.model = make_porous_media(modes, space.number("r", 4.0), model.number("kappa", 0.1));
        break;
    }
    case ModelFamily::p_laplace: {
        model_keys.insert({"c0", "c1", "c2"});
        model.allow(model_keys);
        space.allow({"nodes", "p"});
        const auto nodes = static_cast<Eigen::Index>(positive_size(space, "nodes", 64));
        cfg.model = make_p_laplace(nodes, space.number("p", 4.0), model.number("c0", 0.1),
                                   model.number("c1", 0.5), model.number("c2", 0.25));
        break;
    }
    }
    cfg.model.theta = model.number("theta", cfg.model.theta);
    require_positive(cfg.model.theta, "model.theta");
    cfg.model.hoelder_gamma = model.number("hoelder_gamma", 0.0);
    const std::uint64_t default_rank = family == ModelFamily::mvsde ? static_cast<std::uint64_t>(cfg.model.dim()) : 1;
    const std::uint64_t rank = model.integer("noise_rank", default_rank);
    require(rank <= static_cast<std::uint64_t>(cfg.model.dim()), "config: model.noise_rank must not exceed the state dimension");
    const double sigma = model.number("sigma", 1.0);
    const double beta1 = model.number("beta1", 0.0);
    const double beta2 = model.number("beta2", 0.0);
    add_channels(cfg.model, static_cast<Eigen::Index>(rank), sigma, beta1, beta2);
    cfg.model.validate();
    cfg.x0 = resolve_x0(cfg.model.space, model.list("x0", {1.0}), model.text("x0_profile", "coordinates"));
    require(cfg.x0.allFinite(), "config: model.x0 must be finite");

    // [grid]
    Section grid(find_section(root, "grid"), "grid", resolved);
    grid.allow({"T", "steps", "dt"});
    const double horizon = grid.number("T", 1.0);
    require_positive(horizon, "grid.T");
    require(!(grid.has("steps") && grid.has("dt")), "config: give grid.steps or grid.dt, not both");
    std::size_t steps = 0;
    if (grid.has("dt")) {
        const double dt = grid.number("dt", 0.0);
        require_positive(dt, "grid.dt");
        const double ratio = horizon / dt;
        require(std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio && std::round(ratio) >= 1.0,
                "config: grid.T must be a whole multiple of grid.dt");
        steps = static_cast<std::size_t>(std::round(ratio));
        grid.integer("steps", steps);
    } else {
        steps = positive_size(grid, "steps", 1000);
    }
    cfg.grid = TimeGrid(horizon, steps);

    // [run]
    Section run(find_section(root, "run"), "run", resolved);
    run.allow({"seed", "eps", "particles", "n_rep", "ensemble_size", "record_particles", "record_stride",
               "energy_bound", "event", "event_center", "event_offset", "event_radius", "event_direction",
               "event_level", "control", "control_value", "control_amplitude", "control_frequency",
               "control_channel", "control_file", "tilt_file", "gradient", "control_family",
               "penalty_initial", "penalty_growth", "max_stages", "max_iterations", "tolerance", "fd_step",
               "delta", "frequencies", "amplitude", "trials", "max_constant", "audit_tolerance"});
    cfg.seed = run.integer("seed", 1);
    cfg.eps = run.list("eps", {0.01});
    for (double e : cfg.eps) {
        require(std::isfinite(e) && e >= 0.0, "config: run.eps values must be >= 0");
    }
    cfg.particles = positive_size(run, "particles", 100);
    cfg.n_rep = positive_size(run, "n_rep", 1000);
    cfg.ensemble_size = positive_size(run, "ensemble_size", 1000);
    cfg.record_particles = static_cast<std::size_t>(run.integer("record_particles", 0));
    cfg.record_stride = positive_size(run, "record_stride", 1);
    cfg.energy_bound = run.optional_number("energy_bound");
    if (cfg.energy_bound) {
        require_positive(*cfg.energy_bound, "run.energy_bound");
    }

    EventConfig& ev = cfg.event;
    ev.kind = run.text("event", "ball");
    require(ev.kind == "ball" || ev.kind == "halfspace" || ev.kind == "whole",
            "config: run.event must be ball, halfspace or whole");
    ev.center = run.has("event_center") ? run.list("event_center", {}) : std::vector<double>{};
    ev.offset = run.list("event_offset", ev.center.empty() ? std::vector<double>{0.0} : std::vector<double>{});
    require(!(run.has("event_center") && run.has("event_offset")),
            "config: give run.event_center or run.event_offset, not both");
    ev.radius = run.number("event_radius", 1e-3);
    require_positive(ev.radius, "run.event_radius");
    ev.direction = run.list("event_direction", {1.0});
    ev.level = run.number("event_level", 0.0);
    require(!std::isnan(ev.level) && ev.level != std::numeric_limits<double>::infinity(),
            "config: run.event_level must be finite or -inf");

    ControlConfig& ctl = cfg.control;
    ctl.kind = run.text("control", "zero");
    require(ctl.kind == "zero" || ctl.kind == "constant" || ctl.kind == "sinusoid" || ctl.kind == "table",
            "config: run.control must be zero, constant, sinusoid or table");
    ctl.value = run.list("control_value", {0.0});
    ctl.amplitude = run.number("control_amplitude", 0.0);
    ctl.frequency = run.number("control_frequency", 0.0);
    require(std::isfinite(ctl.amplitude) && std::isfinite(ctl.frequency) && ctl.frequency >= 0.0,
            "config: control amplitude must be finite and frequency >= 0");
    ctl.channel = static_cast<Eigen::Index>(run.integer("control_channel", 0));
    const std::string control_file = run.text("control_file", "");
    if (!control_file.empty()) {
        ctl.file = base_dir / control_file;
    }
    require(ctl.kind != "table" || !control_file.empty(), "config: run.control = table needs run.control_file");
    const std::string tilt_file = run.text("tilt_file", "");
    if (!tilt_file.empty()) {
        cfg.tilt_file = base_dir / tilt_file;
    }

    RateOptions& ro = cfg.rate;
    const std::string gradient = run.text("gradient", "fd");
    require(gradient == "fd" || gradient == "adjoint", "config: run.gradient must be fd or adjoint");
    ro.gradient = gradient == "fd" ? GradientMode::finite_difference : GradientMode::adjoint;
    const std::string cf = run.text("control_family", "piecewise");
    require(cf == "piecewise" || cf == "constant", "config: run.control_family must be piecewise or constant");
    ro.family = cf == "piecewise" ? ControlFamily::piecewise_constant : ControlFamily::constant;
    ro.penalty_initial = run.number("penalty_initial", ro.penalty_initial);
    require_positive(ro.penalty_initial, "run.penalty_initial");
    ro.penalty_growth = run.number("penalty_growth", ro.penalty_growth);
    require(std::isfinite(ro.penalty_growth) && ro.penalty_growth > 1.0, "config: run.penalty_growth must exceed 1");
    ro.max_stages = static_cast<int>(positive_size(run, "max_stages", static_cast<std::uint64_t>(ro.max_stages)));
    ro.max_iterations = static_cast<int>(positive_size(run, "max_iterations", static_cast<std::uint64_t>(ro.max_iterations)));
    ro.tolerance = run.number("tolerance", ro.tolerance);
    require_positive(ro.tolerance, "run.tolerance");
    ro.fd_step = run.number("fd_step", ro.fd_step);
    require_positive(ro.fd_step, "run.fd_step");

    const double t = cfg.grid.horizon();
    cfg.delta = run.list("delta", {t / 8, t / 16, t / 32, t / 64, t / 128});
    for (double d : cfg.delta) {
        require_positive(d, "run.delta values");
    }
    cfg.frequencies = run.list("frequencies", cfg.frequencies);
    for (double f : cfg.frequencies) {
        require(std::isfinite(f) && f >= 0.0, "config: run.frequencies must be >= 0");
    }
    cfg.amplitude = run.number("amplitude", cfg.amplitude);
    require(std::isfinite(cfg.amplitude), "config: run.amplitude must be finite");
    cfg.audit.trials = positive_size(run, "trials", cfg.audit.trials);
    cfg.audit.max_constant = run.number("max_constant", cfg.audit.max_constant);
    require_positive(cfg.audit.max_constant, "run.max_constant");
    cfg.audit.tolerance = run.number("audit_tolerance", cfg.audit.tolerance);
    require_positive(cfg.audit.tolerance, "run.audit_tolerance");
    cfg.audit.seed = cfg.seed;

    cfg.resolved_json = resolved.dump();
    return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    return from_tree(tree, base_dir);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "config: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
    config.seed = seed;
    config.audit.seed = seed;
    json resolved = json::parse(config.resolved_json);
    resolved["run"]["seed"] = seed;
    config.resolved_json = resolved.dump();
}

std::string config_sha256(const ExperimentConfig& config) { return sha256_hex(config.resolved_json); }

RareEvent build_event(const ExperimentConfig& config, const State& limit_terminal) {
    const SpaceSpec& space = config.model.space;
    const EventConfig& ev = config.event;
    auto expand = [&](const std::vector<double>& v, const std::string& key) -> State {
        if (v.size() == 1) {
            return State::Constant(space.dim(), v[0]);
        }
        require(static_cast<Eigen::Index>(v.size()) == space.dim(),
                "config: run." + key + " must hold 1 or dim values");
        return Eigen::Map<const State>(v.data(), space.dim());
    };
    if (ev.kind == "whole") {
        return RareEvent::whole_space(space);
    }
    if (ev.kind == "halfspace") {
        State w = expand(ev.direction, "event_direction");
        const double norm = h_norm(w, space);
        require(norm > 0.0, "config: run.event_direction must be nonzero");
        return RareEvent::halfspace(w / norm, ev.level, space);
    }
    const State center = ev.center.empty() ? State(limit_terminal + expand(ev.offset, "event_offset"))
                                           : expand(ev.center, "event_center");
    return RareEvent::ball(center, ev.radius);
}

Control build_control(const ExperimentConfig& config) {
    const ControlConfig& c = config.control;
    const Eigen::Index m = config.model.noise_rank();
    if (c.kind == "table") {
        return read_control_csv(c.file, config.grid, m);
    }
    if (c.kind == "zero") {
        return Control::zero(config.grid, m);
    }
    Eigen::VectorXd base(m);
    if (c.value.size() == 1) {
        base.setConstant(c.value[0]);
    } else {
        require(static_cast<Eigen::Index>(c.value.size()) == m, "config: run.control_value must hold 1 or noise_rank values");
        base = Eigen::Map<const Eigen::VectorXd>(c.value.data(), m);
    }
    if (c.kind == "constant") {
        return Control::constant(config.grid, base);
    }
    require(c.channel < m, "config: run.control_channel out of range");
    return Control::oscillatory(config.grid, base, c.amplitude, c.frequency, c.channel);
}

Control read_control_csv(const std::filesystem::path& path, const TimeGrid& grid, Eigen::Index rank) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "control table: cannot open '" + path.string() + "'");
    std::string line;
    bool header_seen = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::string item;
        std::istringstream cells(line);
        while (std::getline(cells, item, ',')) {
            row.push_back(to_double(item, "control table cell"));
        }
        require(static_cast<Eigen::Index>(row.size()) == rank + 1,
                "control table: each row needs t plus noise_rank values");
        rows.push_back(std::move(row));
    }
    require(rows.size() == grid.steps(), "control table: row count " + std::to_string(rows.size()) +
                                             " does not match grid steps " + std::to_string(grid.steps()));
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), rank);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double t = grid.time(i);
        require(std::abs(rows[i][0] - t) <= 1e-9 * std::max(1.0, grid.horizon()),
                "control table: time column does not match the grid at row " + std::to_string(i));
        for (Eigen::Index j = 0; j < rank; ++j) {
            values(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j) + 1];
        }
    }
    return Control(grid, values);
}

}  // namespace mvldp
