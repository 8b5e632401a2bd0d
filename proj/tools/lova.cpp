// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

// lova: long-form video-to-audio latent diffusion at desk scale.
//
// Exit status: 0 success, 2 usage, 3 numeric failure, 4 I/O.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lova/app.hpp"
#include "lova/errors.hpp"

namespace {

struct Common {
    std::optional<std::string> config;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Run config file (key=value lines)");
    cmd->add_option("--set", c.overrides, "Config override key=value (repeatable)");
}

lova::RunConfig resolve(const Common& c) {
    std::optional<lova::path> file;
    if (c.config) file = *c.config;
    return lova::resolve_config(file, c.overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lova: long-form video-to-audio latent diffusion"};
    app.require_subcommand(1);
    Common common;

    lova::MakeDataOptions make;
    auto* make_cmd = app.add_subcommand("make-data", "Write a synthetic paired corpus");
    add_common(make_cmd, common);
    make_cmd->add_option("--out", make.out, "Output directory")->required();
    make_cmd->add_option("--count", make.count, "Number of examples")->check(CLI::PositiveNumber);
    make_cmd->add_option("--split", make.split, "pretrain (10 s), finetune (10-60 s) or eval (data.eval_duration)")
        ->check(CLI::IsMember({"pretrain", "finetune", "eval"}));

    lova::TrainVaeOptions vae;
    auto* vae_cmd = app.add_subcommand("train-vae", "Train the audio VAE on a corpus");
    add_common(vae_cmd, common);
    vae_cmd->add_option("--data", vae.data, "Corpus directory")->required();
    vae_cmd->add_option("--out", vae.out, "VAE checkpoint path")->required();

    lova::TrainOptions pre, fine;
    std::optional<std::string> pre_resume, pre_curve, fine_from, fine_resume, fine_curve;
    std::optional<int> pre_epochs, fine_epochs;
    auto* pre_cmd = app.add_subcommand("pretrain", "Pretrain the denoiser on fixed-length pairs");
    add_common(pre_cmd, common);
    pre_cmd->add_option("--data", pre.data, "Corpus directory")->required();
    pre_cmd->add_option("--vae", pre.vae, "VAE checkpoint")->required();
    pre_cmd->add_option("--out", pre.out, "Output checkpoint")->required();
    pre_cmd->add_option("--resume", pre_resume, "Continue from a pretrain checkpoint");
    pre_cmd->add_option("--curve", pre_curve, "Append (step, phase, loss, lr) rows to this CSV");
    pre_cmd->add_option("--epochs", pre_epochs, "Total epochs (overrides pretrain.epochs)");

    auto* fine_cmd = app.add_subcommand("finetune", "Finetune PE_z, PE_c and the final block on long pairs");
    add_common(fine_cmd, common);
    fine_cmd->add_option("--data", fine.data, "Corpus directory")->required();
    fine_cmd->add_option("--vae", fine.vae, "VAE checkpoint")->required();
    fine_cmd->add_option("--out", fine.out, "Output checkpoint")->required();
    fine_cmd->add_option("--from-checkpoint", fine_from, "Pretrain checkpoint to start from");
    fine_cmd->add_option("--resume", fine_resume, "Continue from a finetune checkpoint");
    fine_cmd->add_option("--curve", fine_curve, "Append (step, phase, loss, lr) rows to this CSV");
    fine_cmd->add_option("--epochs", fine_epochs, "Total epochs (overrides finetune.epochs)");

    lova::GenerateOptions gen;
    std::optional<std::string> gen_features, gen_data;
    auto* gen_cmd = app.add_subcommand("generate", "Generate audio for a condition track");
    add_common(gen_cmd, common);
    gen_cmd->add_option("--checkpoint", gen.checkpoint, "Denoiser checkpoint")->required();
    gen_cmd->add_option("--vae", gen.vae, "VAE checkpoint")->required();
    gen_cmd->add_option("--features", gen_features, "Cached-feature file");
    gen_cmd->add_option("--data", gen_data, "Corpus directory (with --id)");
    gen_cmd->add_option("--id", gen.id, "Example id inside --data");
    gen_cmd->add_option("--mode", gen.mode, "full or split")->check(CLI::IsMember({"full", "split"}));
    gen_cmd->add_option("--split-duration", gen.split_duration, "Segment length in split mode (s)")
        ->check(CLI::PositiveNumber);
    gen_cmd->add_option("--remainder", gen.remainder, "Short last segment: true_length or pad_and_trim")
        ->check(CLI::IsMember({"true_length", "pad_and_trim"}));
    gen_cmd->add_option("--duration", gen.duration, "Output duration (s); defaults to the feature track length");
    gen_cmd->add_option("--seed", gen.seed, "Sampler seed (overrides sampler.seed)");
    gen_cmd->add_flag("--raw-weights", gen.raw_weights, "Use raw instead of EMA weights");
    gen_cmd->add_option("--out", gen.out, "Output WAV; provenance goes next to it as .json")->required();

    lova::EvaluateOptions ev;
    std::optional<std::string> ev_csv;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score generated WAVs against a reference corpus");
    add_common(ev_cmd, common);
    ev_cmd->add_option("--generated", ev.generated, "Directory of generated WAVs named like the reference")
        ->required();
    ev_cmd->add_option("--reference", ev.reference, "Reference corpus directory")->required();
    ev_cmd->add_option("--out", ev.out, "MetricReport path")->required();
    ev_cmd->add_option("--csv", ev_csv, "Per-audio CSV path");

    lova::CompareOptions cmp;
    auto* cmp_cmd = app.add_subcommand("compare-splits", "Generate and evaluate across split durations");
    add_common(cmp_cmd, common);
    cmp_cmd->add_option("--checkpoint", cmp.checkpoint, "Denoiser checkpoint")->required();
    cmp_cmd->add_option("--vae", cmp.vae, "VAE checkpoint")->required();
    cmp_cmd->add_option("--data", cmp.data, "Evaluation corpus directory")->required();
    cmp_cmd->add_option("--splits", cmp.splits, "Split durations in seconds and/or 'full'")->delimiter(',');
    cmp_cmd->add_option("--out-dir", cmp.out_dir, "Output directory")->required();
    cmp_cmd->add_option("--limit", cmp.limit, "Use only the first N corpus examples");
    cmp_cmd->add_flag("--raw-weights", cmp.raw_weights, "Use raw instead of EMA weights");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto opt_path = [](const std::optional<std::string>& s) -> std::optional<lova::path> {
        if (s) return lova::path(*s);
        return std::nullopt;
    };

    try {
        const lova::RunConfig config = resolve(common);
        if (*make_cmd) {
            lova::make_data(config, make, std::cerr);
        } else if (*vae_cmd) {
            lova::train_vae(config, vae, std::cerr);
        } else if (*pre_cmd) {
            pre.resume = opt_path(pre_resume);
            pre.curve = opt_path(pre_curve);
            pre.epochs = pre_epochs;
            lova::pretrain(config, pre, std::cerr);
        } else if (*fine_cmd) {
            fine.from_checkpoint = opt_path(fine_from);
            fine.resume = opt_path(fine_resume);
            fine.curve = opt_path(fine_curve);
            fine.epochs = fine_epochs;
            lova::finetune(config, fine, std::cerr);
        } else if (*gen_cmd) {
            gen.features = opt_path(gen_features);
            gen.data = opt_path(gen_data);
            lova::generate(config, gen, std::cerr);
        } else if (*ev_cmd) {
            ev.csv = opt_path(ev_csv);
            lova::evaluate(config, ev, std::cerr);
        } else if (*cmp_cmd) {
            lova::compare_splits(config, cmp, std::cerr);
        }
    } catch (const lova::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
