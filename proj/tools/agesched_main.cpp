#include <CLI11.hpp>

#include <iostream>

#include "agesched/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Scheduling-policy solver and simulator for remote inference over "
                 "two-way channels with Markov-modulated delay"};
    app.require_subcommand(1);

    std::string config_path;
    std::string artifact_path;
    agesched::CommandOptions opts;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", opts.seed, "base seed (overrides config)");
        cmd->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
    };

    CLI::App* curve = app.add_subcommand("error-curve", "tabulate the inference-error curve");
    add_common(curve);
    CLI::App* solve = app.add_subcommand("solve", "solve the optimal mapping and threshold");
    add_common(solve);
    CLI::App* simulate = app.add_subcommand("simulate", "simulate a solved policy artifact");
    add_common(simulate);
    simulate->add_option("--artifact", artifact_path, "policy artifact from 'solve'")->required();
    simulate->add_option("--trace", opts.trace_slots, "also dump a per-slot trace of this length");
    CLI::App* sweep = app.add_subcommand("sweep", "three-policy comparison across alpha values");
    add_common(sweep);
    CLI::App* oracle = app.add_subcommand("oracle-check",
                                          "verify the policy against value iteration");
    add_common(oracle);

    CLI11_PARSE(app, argc, argv);

    try {
        const agesched::ExperimentConfig config = agesched::ExperimentConfig::load(config_path);
        if (curve->parsed()) {
            agesched::cmd_error_curve(config, opts);
        } else if (solve->parsed()) {
            agesched::cmd_solve(config, opts);
        } else if (simulate->parsed()) {
            agesched::cmd_simulate(config, artifact_path, opts);
        } else if (sweep->parsed()) {
            agesched::cmd_sweep(config, opts);
        } else if (oracle->parsed()) {
            if (!agesched::cmd_oracle_check(config, opts)) return 3;
        }
    } catch (const agesched::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const agesched::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
