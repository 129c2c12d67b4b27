#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Gradient-penalized regression via the field equation"};
    app.require_subcommand(1);

    fieldreg::cli::RunOptions opts;
    std::string config, out_dir = ".";
    const char* commands[][2] = {
        {"solve", "Solve the field equation for one lambda"},
        {"oracle", "Compare the field solver with direct risk minimization"},
        {"sweep", "Solve over an increasing lambda sequence"},
        {"mms", "Manufactured-solution convergence study"},
        {"denoise", "Synthetic post-regularization experiment"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON run configuration")->required();
        sub->add_option("--out-dir", out_dir, "Directory for output files");
        sub->add_flag("--quiet", opts.quiet, "Suppress the summary on stdout");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fieldreg::cli::kExitInvalidConfig;
    }

    opts.config = config;
    opts.out_dir = out_dir;
    return fieldreg::cli::run_command(app.get_subcommands().front()->get_name(), opts, std::cout, std::cerr);
}
