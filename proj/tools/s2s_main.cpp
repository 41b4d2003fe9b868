#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "s2s/runs.hpp"
#include "s2s/version.hpp"

// Exit codes: 0 success, 2 config/usage error, 3 training abort (last-good
// checkpoint already on disk), 4 artifact-format error.

namespace {

std::vector<std::string> collect_cmdline(int argc, char** argv) {
    std::vector<std::string> v;
    v.reserve(static_cast<std::size_t>(argc));
    for (int i = 0; i < argc; ++i) v.emplace_back(argv[i]);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"speckle-aware self-supervised ultrasound despeckling toolkit"};
    app.set_version_flag("--version", std::string("s2s ") + s2s::version_string);
    app.require_subcommand(1);

    s2s::run::SimulateOpts sim_opts;
    CLI::App* sim = app.add_subcommand("simulate", "synthesize clean/noisy B-mode pairs");
    sim->add_option("--targets", sim_opts.targets, "directory of clean target images");
    sim->add_option("--config", sim_opts.config, "TOML with [sim] and optional [dataset]");
    sim->add_option("--out", sim_opts.out, "run directory")->required();
    sim->add_option("--seed", sim_opts.seed, "base seed; image i uses seed+i");

    s2s::run::TrainOpts train_opts;
    CLI::App* train = app.add_subcommand("train", "fit a despeckling model on a dataset");
    train->add_option("--data", train_opts.data, "dataset directory")->required();
    train->add_option("--config", train_opts.config, "TOML with [train] and [arch]");
    train->add_option("--out", train_opts.out, "run directory")->required();
    train->add_option("--mode", train_opts.mode, "speckle2self | noise2true | noise2noise");
    train->add_option("--loss", train_opts.loss, "mse_l1 | mse_mse | l1_l1 | mse_only | l1_mse");
    train->add_option("--branches", train_opts.branches, "hml | hl | ml | hm | one");
    train->add_option("--interp", train_opts.interp, "bilinear | bicubic | area");
    train->add_option("--lr", train_opts.lr, "learning rate");
    train->add_option("--batch", train_opts.batch, "batch size");
    train->add_option("--epochs", train_opts.epochs, "training epochs");
    train->add_option("--seed", train_opts.seed, "init and shuffle seed");
    train->add_option("--checkpoint-every", train_opts.checkpoint_every,
                      "periodic checkpoint interval in epochs (0 = none)");

    s2s::run::DenoiseOpts den_opts;
    CLI::App* den = app.add_subcommand("denoise", "run a trained model over images");
    den->add_option("--model", den_opts.model, "checkpoint path")->required();
    den->add_option("--input", den_opts.input, "image file or directory")->required();
    den->add_option("--out", den_opts.out, "run directory")->required();

    s2s::run::EvalOpts eval_opts;
    CLI::App* ev = app.add_subcommand("eval", "score predictions against references");
    ev->add_option("--pred", eval_opts.pred, "prediction directory")->required();
    ev->add_option("--ref", eval_opts.ref, "reference directory")->required();
    ev->add_option("--out", eval_opts.out, "run directory")->required();

    CLI::App* analyze = app.add_subcommand("analyze", "inspect speckle structure");
    analyze->require_subcommand(1);
    s2s::run::FreqOpts freq_opts;
    CLI::App* freq = analyze->add_subcommand("freq", "cross-scale band correlations");
    freq->add_option("--input", freq_opts.input, "image directory")->required();
    freq->add_option("--out", freq_opts.out, "run directory")->required();
    freq->add_option("--mask", freq_opts.mask, "band-split half width (0 = auto)");
    freq->add_option("--interp", freq_opts.interp, "bilinear | bicubic | area");
    s2s::run::SvdOpts svd_opts;
    CLI::App* svd = analyze->add_subcommand("svd", "singular spectra of center patches");
    svd->add_option("--input", svd_opts.input, "image directory")->required();
    svd->add_option("--out", svd_opts.out, "run directory")->required();
    svd->add_option("--patch", svd_opts.patch, "square patch size");
    svd->add_option("--topk", svd_opts.topk, "leading values in the energy fraction");

    s2s::run::AblateOpts abl_opts;
    CLI::App* abl = app.add_subcommand("ablate", "train a variant suite and rank by SSIM");
    abl->add_option("suite", abl_opts.suite, "loss | interp | scales")->required();
    abl->add_option("--data", abl_opts.data, "dataset directory")->required();
    abl->add_option("--config", abl_opts.config, "TOML with [train] and [arch]");
    abl->add_option("--out", abl_opts.out, "run directory")->required();

    s2s::run::BaselineOpts base_opts;
    CLI::App* base = app.add_subcommand("baseline", "classical despeckling filters");
    base->add_option("method", base_opts.method, "srad | nlm")->required();
    base->add_option("--input", base_opts.input, "image directory")->required();
    base->add_option("--ref", base_opts.ref, "reference directory for ssim columns");
    base->add_option("--config", base_opts.config, "TOML with [srad] / [nlm]");
    base->add_option("--out", base_opts.out, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;  // --help/--version exit 0, usage errors exit 2
    }

    const std::vector<std::string> cmdline = collect_cmdline(argc, argv);
    try {
        if (sim->parsed()) s2s::run::cmd_simulate(sim_opts, cmdline);
        if (train->parsed()) s2s::run::cmd_train(train_opts, cmdline);
        if (den->parsed()) s2s::run::cmd_denoise(den_opts, cmdline);
        if (ev->parsed()) s2s::run::cmd_eval(eval_opts, cmdline);
        if (freq->parsed()) s2s::run::cmd_analyze_freq(freq_opts, cmdline);
        if (svd->parsed()) s2s::run::cmd_analyze_svd(svd_opts, cmdline);
        if (abl->parsed()) s2s::run::cmd_ablate(abl_opts, cmdline);
        if (base->parsed()) s2s::run::cmd_baseline(base_opts, cmdline);
    } catch (const s2s::run::TrainAborted& e) {
        std::fprintf(stderr, "s2s: training aborted: %s\n", e.what());
        return 3;
    } catch (const s2s::nn::CheckpointError& e) {
        std::fprintf(stderr, "s2s: %s\n", e.what());
        return 4;
    } catch (const s2s::img::IoError& e) {
        std::fprintf(stderr, "s2s: %s\n", e.what());
        return 4;
    } catch (const s2s::run::ManifestError& e) {
        std::fprintf(stderr, "s2s: %s\n", e.what());
        return 4;
    } catch (const s2s::toml::TomlError& e) {
        std::fprintf(stderr, "s2s: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "s2s: %s\n", e.what());
        return 2;
    }
    return 0;
}
