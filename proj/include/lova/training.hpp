// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Two-phase denoiser training.
//
// pretrain  - every denoiser parameter is trainable
// finetune  - only PE_z, PE_c and the final block; starts from a pretrain
//             checkpoint with a fresh optimizer
//
// A checkpoint holds params, EMA params, optimizer moments, phase, step,
// epoch cursor, noise-RNG state and the config text, so resuming replays the
// remaining trajectory bit-exactly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lova/checkpoint.hpp"
#include "lova/diffusion_core.hpp"
#include "lova/dit.hpp"
#include "lova/optim.hpp"
#include "lova/rng.hpp"

namespace lova {

enum class Phase { pretrain, finetune };

Phase parse_phase(const std::string& name);
const char* to_string(Phase phase);

/// Names of the parameters the phase may update, in registry order.
std::vector<std::string> freeze_mask(Phase phase, const ParamStore& registry);

struct TrainingExample {
    std::string id;
    Matrix latent;     // [T', token_dim], already multiplied by the VAE latent scale
    Matrix condition;  // [N, h_C], raw features (PE_c is added by the model)
};

struct TrainConfig {
    AdamWConfig optimizer;
    int batch_size = 4;
    double cond_dropout = 0.1;
    double ema_decay = 0.999;
    std::uint64_t seed = 0;
    /// Save through the sink every this many steps; 0 disables.
    int checkpoint_every = 0;
    ScheduleKind schedule = ScheduleKind::cosine;
    int diffusion_steps = 1000;
};

struct CurvePoint {
    std::int64_t step = 0;
    Phase phase = Phase::pretrain;
    double loss = 0.0;
    double lr = 0.0;
};

/// Append-only CSV: step,phase,loss,lr.
class CurveLog {
public:
    explicit CurveLog(const std::filesystem::path& path);
    void operator()(const CurvePoint& p);

private:
    std::ofstream out_;
};

class Trainer {
public:
    using CheckpointSink = std::function<void(const TensorContainer&)>;
    using CurveSink = std::function<void(const CurvePoint&)>;

    Trainer(DiT model, TrainConfig config, Phase phase);

    /// Starts finetuning from a pretrain checkpoint. Throws PreconditionError
    /// when the container is not a pretrain checkpoint.
    static Trainer finetune_from(const TensorContainer& pretrain, TrainConfig config);

    /// Restores a checkpoint exactly as saved.
    static Trainer resume(const TensorContainer& checkpoint);

    /// One optimizer step over `batch`. The loss is the squared error summed
    /// over every latent element of the batch divided by the element count,
    /// so sequences of different lengths need no padding.
    double train_step(const std::vector<const TrainingExample*>& batch);

    /// Trains until `total_epochs` epochs have completed, continuing from the
    /// stored epoch cursor. Returns the final checkpoint.
    TensorContainer run(const std::vector<TrainingExample>& data, int total_epochs,
                        const CheckpointSink& sink = {}, const CurveSink& curve = {});

    TensorContainer checkpoint() const;

    DiT& model() { return model_; }
    const DiT& model() const { return model_; }
    Phase phase() const { return phase_; }
    std::int64_t step() const { return step_; }
    int epoch() const { return epoch_; }
    const std::vector<std::string>& trainable() const { return trainable_; }
    const std::map<std::string, Matrix>& ema() const { return ema_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    const TrainConfig& config() const { return config_; }

    /// Free-form text stored with checkpoints (the resolved run config).
    void set_config_text(std::string text) { config_text_ = std::move(text); }

private:
    void reset_ema();
    void update_ema();

    DiT model_;
    TrainConfig config_;
    Phase phase_;
    NoiseSchedule schedule_;
    AdamW optimizer_;
    std::vector<std::string> trainable_;
    std::map<std::string, Matrix> ema_;
    Rng rng_;
    std::int64_t step_ = 0;
    int epoch_ = 0;
    std::int64_t cursor_ = 0;
    std::string config_text_;
};

/// Order in which an epoch visits the examples.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch);

/// Model configuration stored in a checkpoint.
void save_dit_config(TensorContainer& out, const DiTConfig& c);
DiTConfig load_dit_config(const TensorContainer& in);

/// Rebuilds the denoiser from a checkpoint, with EMA weights when `use_ema`.
DiT load_denoiser(const TensorContainer& checkpoint, bool use_ema = true);

}  // namespace lova
