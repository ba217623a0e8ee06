#pragma once

// Experiment configuration: a sectioned INI file with [model], [space],
// [grid] and [run]. Unknown keys are rejected; every key that influences a
// run is echoed into a canonical JSON document whose SHA-256 is stamped on
// the output files.

#include "mvldp/dynamics.hpp"
#include "mvldp/ldp.hpp"
#include "mvldp/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvldp {

struct EventConfig {
    std::string kind = "ball";  // ball | halfspace | whole
    std::vector<double> center;
    std::vector<double> offset;  // added to the limit terminal state when center is empty
    double radius = 1e-3;
    std::vector<double> direction;
    double level = 0.0;
};

struct ControlConfig {
    std::string kind = "zero";  // zero | constant | sinusoid | table
    std::vector<double> value;
    double amplitude = 0.0;
    double frequency = 0.0;
    Eigen::Index channel = 0;
    std::filesystem::path file;
};

struct ExperimentConfig {
    ModelSpec model;
    State x0;
    TimeGrid grid{1.0, 1};

    std::uint64_t seed = 1;
    std::vector<double> eps{0.01};
    std::size_t particles = 100;
    std::size_t n_rep = 1000;
    std::size_t ensemble_size = 1000;
    std::size_t record_particles = 0;  // 0 = all
    std::size_t record_stride = 1;
    std::optional<double> energy_bound;

    EventConfig event;
    ControlConfig control;
    std::filesystem::path tilt_file;
    RateOptions rate;

    std::vector<double> delta;
    std::vector<double> frequencies{4, 8, 16, 32, 64};
    double amplitude = 1.0;
    AuditOptions audit;

    /// Canonical JSON of every resolved key (defaults included).
    std::string resolved_json;
};

/// Reads and validates an INI file. Relative file paths inside the config
/// resolve against the config's directory. Throws InvalidInput.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses INI text; `base_dir` anchors relative file paths.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Replaces the run seed and refreshes the resolved JSON.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

/// Lower-case hex SHA-256 of the resolved JSON.
std::string config_sha256(const ExperimentConfig& config);

/// Event with offsets resolved against the limit terminal state.
RareEvent build_event(const ExperimentConfig& config, const State& limit_terminal);

/// Control from the [run] control keys (table files are read here).
Control build_control(const ExperimentConfig& config);

/// Reads a control CSV in the format written by the rate_min command. The
/// time column must match the grid's left nodes.
Control read_control_csv(const std::filesystem::path& path, const TimeGrid& grid, Eigen::Index rank);

}  // namespace mvldp
