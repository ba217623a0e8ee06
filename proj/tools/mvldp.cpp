#include "mvldp/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    namespace cli = mvldp::cli;
    CLI::App app{"McKean-Vlasov large deviation toolkit"};
    app.set_version_flag("--version", cli::kVersion);

    std::string command;
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string which;
    app.add_option("command", command, "limit | simulate | skeleton | rate_min | rare_event | verify")
        ->required()
        ->check(CLI::IsMember({"limit", "simulate", "skeleton", "rate_min", "rare_event", "verify"}));
    app.add_option("--config", config, "INI experiment file")->required();
    app.add_option("--out", out, "output directory");
    app.add_option("--seed", seed, "override [run] seed");
    app.add_option("--threads", threads, "worker threads (fallback: MVLDP_THREADS, then 1)")
        ->check(CLI::PositiveNumber);
    app.add_option("--which", which, "verify target")->check(CLI::IsMember({"l5", "l6", "t2", "t3", "hypo"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::exit_validation;
    }

    cli::RunOptions options;
    options.out_dir = out;
    if (threads) {
        options.exec.threads = *threads;
    } else if (const char* env = std::getenv("MVLDP_THREADS")) {
        try {
            options.exec.threads = std::stoi(env);
        } catch (const std::exception&) {
            std::cerr << "mvldp: invalid input: MVLDP_THREADS must be a positive integer\n";
            return cli::exit_validation;
        }
    }
    return cli::run(command, config, options, seed, which, std::cerr);
}
