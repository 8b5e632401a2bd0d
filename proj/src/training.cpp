// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "lova/errors.hpp"

namespace lova {

Phase parse_phase(const std::string& name) {
    if (name == "pretrain") return Phase::pretrain;
    if (name == "finetune") return Phase::finetune;
    throw InvalidArgument("unknown training phase '" + name + "'");
}

const char* to_string(Phase phase) { return phase == Phase::pretrain ? "pretrain" : "finetune"; }

std::vector<std::string> freeze_mask(Phase phase, const ParamStore& registry) {
    int last_block = -1;
    for (const auto& name : registry.names()) {
        const std::string g = parameter_group(name);
        if (g.rfind("blocks.", 0) == 0) last_block = std::max(last_block, std::stoi(g.substr(7)));
    }
    const std::string final_block = "blocks." + std::to_string(last_block);
    std::vector<std::string> out;
    for (const auto& name : registry.names()) {
        const std::string g = parameter_group(name);
        if (phase == Phase::pretrain || g == "pe_z" || g == "pe_c" || g == final_block) out.push_back(name);
    }
    return out;
}

CurveLog::CurveLog(const std::filesystem::path& path) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw IoError("cannot open training curve: " + path.string());
    if (fresh) out_ << "step,phase,loss,lr\n";
}

void CurveLog::operator()(const CurvePoint& p) {
    out_ << p.step << ',' << to_string(p.phase) << ',' << std::setprecision(17) << p.loss << ',' << p.lr << '\n';
    out_.flush();
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x1000u + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

Trainer::Trainer(DiT model, TrainConfig config, Phase phase)
    : model_(std::move(model)),
      config_(config),
      phase_(phase),
      schedule_(make_schedule(config.schedule, config.diffusion_steps)),
      optimizer_(config.optimizer),
      trainable_(freeze_mask(phase, model_.params())),
      rng_(derive_seed(config.seed, 0x2000u + static_cast<std::uint64_t>(phase))) {
    if (config_.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (config_.cond_dropout < 0.0 || config_.cond_dropout > 1.0)
        throw InvalidArgument("cond_dropout must be in [0, 1]");
    reset_ema();
}

void Trainer::reset_ema() {
    ema_.clear();
    for (const auto& name : model_.params().names()) ema_[name] = model_.params().at(name).value();
}

void Trainer::update_ema() {
    const double s = static_cast<double>(step_);
    const double decay = std::min(config_.ema_decay, (1.0 + s) / (10.0 + s));
    for (const auto& name : trainable_) {
        Matrix& e = ema_.at(name);
        e = decay * e + (1.0 - decay) * model_.params().at(name).value();
    }
}

double Trainer::train_step(const std::vector<const TrainingExample*>& batch) {
    if (batch.empty()) throw InvalidArgument("train_step: empty batch");
    double elements = 0.0;
    for (const auto* ex : batch) {
        if (ex->latent.cols() != model_.config().latent_dim || ex->condition.cols() != model_.config().cond_dim)
            throw InvalidArgument("train_step: example '" + ex->id + "' has inconsistent shapes");
        elements += static_cast<double>(ex->latent.size());
    }

    ParamStore& params = model_.params();
    params.zero_grad();
    double total = 0.0;
    std::ostringstream fingerprint;
    for (const auto* ex : batch) {
        const int t = static_cast<int>(rng_.below(static_cast<std::uint64_t>(schedule_.num_steps())));
        Matrix eps(ex->latent.rows(), ex->latent.cols());
        rng_.fill_normal(eps);
        const bool drop = rng_.uniform() < config_.cond_dropout;
        fingerprint << ex->id << "@t=" << t << (drop ? "(null)" : "") << ' ';

        const Matrix z_t = forward_diffuse(ex->latent, schedule_.alpha_bar(t), eps);
        const ag::Var context = drop ? model_.null_context(ex->condition.rows()) : model_.condition(ex->condition);
        ag::Var pred;
        try {
            pred = model_.forward(ag::constant(z_t), context, static_cast<double>(t));
        } catch (const TrainingDiverged&) {
            throw;
        } catch (const NumericFailure& e) {
            throw TrainingDiverged(std::string(e.what()) + " at step " + std::to_string(step_) +
                                   ", batch: " + fingerprint.str());
        }
        const ag::Var loss = ag::scale(ag::sum(ag::square(ag::sub(pred, ag::constant(eps)))), 1.0 / elements);
        if (!std::isfinite(loss.item()))
            throw TrainingDiverged("non-finite loss at step " + std::to_string(step_) + ", batch: " +
                                   fingerprint.str());
        total += loss.item();
        ag::backward(loss);
    }
    optimizer_.step(params, trainable_);
    ++step_;
    update_ema();
    params.zero_grad();
    return total;
}

TensorContainer Trainer::run(const std::vector<TrainingExample>& data, int total_epochs, const CheckpointSink& sink,
                             const CurveSink& curve) {
    if (data.empty() && total_epochs > epoch_) throw InvalidArgument("run: empty dataset");
    const auto n = static_cast<std::int64_t>(data.size());
    while (epoch_ < total_epochs) {
        const auto order = epoch_order(data.size(), config_.seed, epoch_);
        while (cursor_ < n) {
            const std::int64_t end = std::min<std::int64_t>(n, cursor_ + config_.batch_size);
            std::vector<const TrainingExample*> batch;
            for (std::int64_t i = cursor_; i < end; ++i) batch.push_back(&data[order[static_cast<std::size_t>(i)]]);
            const double lr = optimizer_.lr_at(optimizer_.steps() + 1);
            const double loss = train_step(batch);
            cursor_ = end;
            if (cursor_ >= n) {
                cursor_ = 0;
                ++epoch_;
            }
            if (curve) curve({step_, phase_, loss, lr});
            if (sink && config_.checkpoint_every > 0 && step_ % config_.checkpoint_every == 0) sink(checkpoint());
            if (cursor_ == 0) break;
        }
    }
    return checkpoint();
}

void save_dit_config(TensorContainer& out, const DiTConfig& c) {
    out.put_int("dit.depth", c.depth);
    out.put_int("dit.heads", c.heads);
    out.put_int("dit.token_dim", c.token_dim);
    out.put_int("dit.latent_dim", c.latent_dim);
    out.put_int("dit.cond_dim", c.cond_dim);
    out.put("dit.mlp_ratio", Matrix::Constant(1, 1, c.mlp_ratio));
    out.put_int("dit.max_tokens", c.max_tokens);
    out.put_int("dit.max_cond", c.max_cond);
}

DiTConfig load_dit_config(const TensorContainer& in) {
    DiTConfig c;
    c.depth = static_cast<int>(in.get_int("dit.depth"));
    c.heads = static_cast<int>(in.get_int("dit.heads"));
    c.token_dim = static_cast<int>(in.get_int("dit.token_dim"));
    c.latent_dim = static_cast<int>(in.get_int("dit.latent_dim"));
    c.cond_dim = static_cast<int>(in.get_int("dit.cond_dim"));
    c.mlp_ratio = in.get_matrix("dit.mlp_ratio")(0, 0);
    c.max_tokens = static_cast<int>(in.get_int("dit.max_tokens"));
    c.max_cond = static_cast<int>(in.get_int("dit.max_cond"));
    return c;
}

namespace {

void put_scalar(TensorContainer& out, const std::string& name, double v) {
    out.put(name, Matrix::Constant(1, 1, v));
}

double get_scalar(const TensorContainer& in, const std::string& name) { return in.get_matrix(name)(0, 0); }

void save_train_config(TensorContainer& out, const TrainConfig& c) {
    put_scalar(out, "train.lr", c.optimizer.lr);
    put_scalar(out, "train.beta1", c.optimizer.beta1);
    put_scalar(out, "train.beta2", c.optimizer.beta2);
    put_scalar(out, "train.eps", c.optimizer.eps);
    put_scalar(out, "train.weight_decay", c.optimizer.weight_decay);
    out.put_int("train.warmup_steps", c.optimizer.warmup_steps);
    put_scalar(out, "train.clip_norm", c.optimizer.clip_norm);
    out.put_int("train.batch_size", c.batch_size);
    put_scalar(out, "train.cond_dropout", c.cond_dropout);
    put_scalar(out, "train.ema_decay", c.ema_decay);
    out.put_int("train.seed", static_cast<std::int64_t>(c.seed));
    out.put_int("train.checkpoint_every", c.checkpoint_every);
    out.put_string("schedule.kind", to_string(c.schedule));
    out.put_int("schedule.steps", c.diffusion_steps);
}

TrainConfig load_train_config(const TensorContainer& in) {
    TrainConfig c;
    c.optimizer.lr = get_scalar(in, "train.lr");
    c.optimizer.beta1 = get_scalar(in, "train.beta1");
    c.optimizer.beta2 = get_scalar(in, "train.beta2");
    c.optimizer.eps = get_scalar(in, "train.eps");
    c.optimizer.weight_decay = get_scalar(in, "train.weight_decay");
    c.optimizer.warmup_steps = static_cast<int>(in.get_int("train.warmup_steps"));
    c.optimizer.clip_norm = get_scalar(in, "train.clip_norm");
    c.batch_size = static_cast<int>(in.get_int("train.batch_size"));
    c.cond_dropout = get_scalar(in, "train.cond_dropout");
    c.ema_decay = get_scalar(in, "train.ema_decay");
    c.seed = static_cast<std::uint64_t>(in.get_int("train.seed"));
    c.checkpoint_every = static_cast<int>(in.get_int("train.checkpoint_every"));
    c.schedule = parse_schedule_kind(in.get_string("schedule.kind"));
    c.diffusion_steps = static_cast<int>(in.get_int("schedule.steps"));
    return c;
}

}  // namespace

TensorContainer Trainer::checkpoint() const {
    TensorContainer out;
    out.put_string("phase", to_string(phase_));
    out.put_int("step", step_);
    out.put_int("epoch", epoch_);
    out.put_int("cursor", cursor_);
    out.put_string("rng", rng_.state());
    out.put_string("config", config_text_);
    save_dit_config(out, model_.config());
    save_train_config(out, config_);
    out.put_params("model.", model_.params());
    for (const auto& name : model_.params().names()) out.put("ema." + name, ema_.at(name));
    optimizer_.save(out, "opt.");
    return out;
}

Trainer Trainer::resume(const TensorContainer& in) {
    Trainer tr(DiT(load_dit_config(in)), load_train_config(in), parse_phase(in.get_string("phase")));
    in.get_params("model.", tr.model_.params());
    for (const auto& name : tr.model_.params().names()) tr.ema_[name] = in.get_matrix("ema." + name);
    tr.optimizer_.load(in, "opt.");
    tr.step_ = in.get_int("step");
    tr.epoch_ = static_cast<int>(in.get_int("epoch"));
    tr.cursor_ = in.get_int("cursor");
    tr.rng_.restore(in.get_string("rng"));
    tr.config_text_ = in.get_string("config");
    return tr;
}

Trainer Trainer::finetune_from(const TensorContainer& pretrain, TrainConfig config) {
    if (!pretrain.contains("phase") || pretrain.get_string("phase") != "pretrain")
        throw PreconditionError("finetune requires a pretrain checkpoint");
    DiT model(load_dit_config(pretrain));
    pretrain.get_params("model.", model.params());
    Trainer tr(std::move(model), config, Phase::finetune);
    tr.config_text_ = pretrain.get_string("config");
    return tr;
}

DiT load_denoiser(const TensorContainer& ckpt, bool use_ema) {
    DiT model(load_dit_config(ckpt));
    ckpt.get_params(use_ema ? "ema." : "model.", model.params());
    return model;
}

}  // namespace lova
