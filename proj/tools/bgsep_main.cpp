#include "bgsep/commands.hpp"
#include "bgsep/config.hpp"
#include "bgsep/error.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Separate a sparse spline spectrum from a smooth background"};
    app.set_version_flag("--version", bgsep::tool_version);
    app.require_subcommand(1);

    bgsep::CommandOptions opts;
    std::string noise_mode;

    auto common = [&](CLI::App* sub, bool needs_instance) {
        sub->add_option("--config", opts.config_path, "Config file or run manifest")->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir, "Output directory (default: $BGSEP_OUT_DIR)");
        if (needs_instance) sub->add_option("--instance", opts.instance_dir, "Instance bundle directory")->required();
        sub->add_option("--q", opts.q, "Exponent of the q-norm objective")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--delta", opts.delta, "Residual threshold (default: from the noise model)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--rank-tol", opts.rank_tol, "Relative singular value cutoff for the projector")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--seed-support", opts.seed_support, "Seed for the planted support");
        sub->add_option("--seed-coeff", opts.seed_coeff, "Seed for the planted coefficients");
        sub->add_option("--seed-noise", opts.seed_noise, "Seed for the noise draw");
        sub->add_option("--noise-mode", noise_mode, "relative_std | relative_var")
            ->check(CLI::IsMember({"relative_std", "relative_var"}));
    };

    auto* simulate = app.add_subcommand("simulate", "Generate a planted instance bundle");
    auto* svd = app.add_subcommand("svd-report", "Singular spectrum of the complement spanning set");
    auto* project = app.add_subcommand("project", "Linear oblique projection, full and truncated");
    auto* separate = app.add_subcommand("separate", "Sparse nonlinear separation");
    auto* experiment = app.add_subcommand("experiment", "Full reproduction over all noise levels");
    common(simulate, false);
    common(svd, true);
    common(project, true);
    common(separate, true);
    common(experiment, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (!noise_mode.empty()) opts.noise_mode = bgsep::parse_noise_mode(noise_mode);

    if (simulate->parsed()) return bgsep::cmd_simulate(opts, std::cout, std::cerr);
    if (svd->parsed()) return bgsep::cmd_svd_report(opts, std::cout, std::cerr);
    if (project->parsed()) return bgsep::cmd_project(opts, std::cout, std::cerr);
    if (separate->parsed()) return bgsep::cmd_separate(opts, std::cout, std::cerr);
    return bgsep::cmd_experiment(opts, std::cout, std::cerr);
}
