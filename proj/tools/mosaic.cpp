// mosaic: train, spectral and sweep runs from a JSON config.

#include <iostream>

#include <CLI11.hpp>

#include "mosaic/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fragmented decentralized learning simulator"};
    app.require_subcommand(1);

    mosaic::CommandOptions options;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", options.config, "JSON config file")->required();
        sub->add_option("--out", options.out, "Output directory")->required();
        sub->add_option("--seed", seed, "Override the master seed");
    };

    auto* train = app.add_subcommand("train", "Run one experiment; writes trace.csv and final_state.csv");
    auto* spectral = app.add_subcommand("spectral", "Contraction factor vs K and consensus recursion");
    auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over K, degree, alpha and seeds");
    for (auto* sub : {train, spectral, sweep}) add_common(sub);
    sweep->add_option("--parallel", options.parallel, "Cells run concurrently")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mosaic::kExitConfig;
    }

    for (auto* sub : {train, spectral, sweep})
        if (sub->parsed() && sub->count("--seed") > 0) options.seed = seed;

    if (train->parsed()) return mosaic::cmd_train(options, std::cerr);
    if (spectral->parsed()) return mosaic::cmd_spectral(options, std::cerr);
    return mosaic::cmd_sweep(options, std::cerr);
}
