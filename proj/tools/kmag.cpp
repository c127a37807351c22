#include <CLI11.hpp>

#include "kmag/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kmag: Kerr-magnon mediated spin-spin coupling simulator"};
    app.require_subcommand(1);

    kmag::cli::RunRequest req;
    std::string config, out;
    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("scenario", req.scenario, "scenario id (see `kmag list`)");
    run->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory");
    run->add_option("--set", req.sets, "override one key, key=value (repeatable)");
    auto* cutoff = run->add_option("--cutoff", "magnon Fock cutoff");
    auto* step = run->add_option("--step", "fixed integrator step in seconds");
    run->add_flag("--from-device", req.from_device, "derive the frame from device parameters");

    app.add_subcommand("list", "list scenarios");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a configuration file");
    validate->add_option("config", validate_path, "JSON configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kmag::cli::Usage;
    }

    if (app.got_subcommand("list")) return kmag::cli::list_scenarios();
    if (app.got_subcommand("validate")) return kmag::cli::validate(validate_path);

    if (!config.empty()) req.config = config;
    if (!out.empty()) req.out = out;
    if (*cutoff) req.cutoff = cutoff->as<int>();
    if (*step) req.step = step->as<double>();
    return kmag::cli::run(req);
}
