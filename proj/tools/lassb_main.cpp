#include <CLI11.hpp>

#include "lassb/cli.hpp"

int main(int argc, char** argv) {
    lassb::cli::RunConfig cfg;
    CLI::App app{"Latent arc strength stochastic blockmodel for directed count networks"};
    app.require_subcommand(1);

    app.add_option("--edges", cfg.edges, "edge-count CSV (src,dst,count)");
    app.add_option("--blocks", cfg.blocks, "block-membership CSV (node,block)");
    app.add_option("--params", cfg.params_in, "parameter JSON (bare or fit report)");
    app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    app.add_option("--epsilon", cfg.epsilon, "dispersion-split init fraction")
        ->capture_default_str();
    app.add_option("--tol", cfg.tol, "EM convergence tolerance")->capture_default_str();
    app.add_option("--max-iter", cfg.max_iter, "EM iteration cap")->capture_default_str();
    app.add_option("--bootstrap-reps", cfg.bootstrap_reps, "bootstrap replicates")
        ->capture_default_str();
    app.add_option("--gof-reps", cfg.gof_reps, "envelope simulation replicates")
        ->capture_default_str();
    app.add_option("--reps", cfg.sim_reps, "networks to simulate")->capture_default_str();
    app.add_option("--level", cfg.level, "confidence level")->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    app.add_option("--threads", cfg.threads, "worker threads for replicates")
        ->capture_default_str();
    app.add_option("--fallback", cfg.fallback, "series fallback: quad or mc")
        ->capture_default_str();
    app.add_option("--cutoff-max", cfg.cutoff_max, "largest triangle cutoff")
        ->capture_default_str();

    auto* fit = app.add_subcommand("fit", "fit the model by EM maximum likelihood");
    auto* simulate = app.add_subcommand("simulate", "draw networks from given parameters");
    auto* bootstrap =
        app.add_subcommand("bootstrap", "fit, then parametric-bootstrap confidence intervals");
    auto* gof = app.add_subcommand("gof", "goodness-of-fit simulation envelopes");
    auto* derive = app.add_subcommand("derive", "recovered shares, strengths, block measures");
    for (auto* sub : {fit, simulate, bootstrap, gof, derive}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    for (const auto* sub : {fit, simulate, bootstrap, gof, derive})
        if (sub->parsed()) cfg.command = sub->get_name();
    return lassb::cli::run(cfg);
}
