#pragma once

#include "mvldp/config.hpp"
#include "mvldp/parallel.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace mvldp::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_validation = 2,
    exit_blow_up = 3,
    exit_optimizer = 4,
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    ExecPolicy exec;
};

inline constexpr const char* kVersion = "1.0.0";

/// "mvldp <version> config_sha256=<hash>", the first line of every CSV.
std::string provenance(const ExperimentConfig& config);

int cmd_limit(const ExperimentConfig& config, const RunOptions& options);
int cmd_simulate(const ExperimentConfig& config, const RunOptions& options);
int cmd_skeleton(const ExperimentConfig& config, const RunOptions& options);
int cmd_rate_min(const ExperimentConfig& config, const RunOptions& options);
int cmd_rare_event(const ExperimentConfig& config, const RunOptions& options);
/// which: l5, l6, t2, t3, hypo.
int cmd_verify(const ExperimentConfig& config, const std::string& which, const RunOptions& options);

/// Loads the config, applies the seed override, dispatches and maps
/// exceptions to exit codes (messages go to `err`).
int run(const std::string& command, const std::filesystem::path& config_path, const RunOptions& options,
        std::optional<std::uint64_t> seed, const std::string& which, std::ostream& err);

}  // namespace mvldp::cli
