// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// 1-D convolutional VAE mapping waveforms to latent token sequences.
//
// Each audio channel is encoded with shared weights and the per-channel
// latents are folded into the feature axis, so a [T, n] waveform becomes a
// [ceil(T / r), n * h] token sequence.

#include <cstdint>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/checkpoint.hpp"
#include "lova/layers.hpp"
#include "lova/optim.hpp"
#include "lova/params.hpp"
#include "lova/wav.hpp"

namespace lova {

struct VaeConfig {
    int channels = 1;
    /// Strides of the downsampling stages; their product is the compression ratio r.
    std::vector<int> strides = {320};
    int latent_dim = 32;
    int hidden = 128;
    double kl_weight = 1e-4;

    int compression_ratio() const;
    int token_dim() const { return channels * latent_dim; }
};

struct VaePosterior {
    Matrix mean;          // [T', n * h]
    Matrix log_variance;  // [T', n * h], clamped to [-30, 20]
};

struct VaeLoss {
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

constexpr double kLogVarMin = -30.0;
constexpr double kLogVarMax = 20.0;

/// Sum over elements of KL(N(mean, exp(log_variance)) || N(0, 1)).
double kl_to_standard_normal(const Matrix& mean, const Matrix& log_variance);

/// mean + exp(log_variance / 2) * n, n ~ N(0, I) drawn from `rng`.
Matrix vae_sample(const VaePosterior& posterior, Rng& rng);
Matrix vae_sample(const VaePosterior& posterior, std::uint64_t seed);

/// Number of latent steps for T samples at compression ratio r: ceil(T / r).
Eigen::Index latent_length(Eigen::Index samples, int compression_ratio);

class AudioVae {
public:
    explicit AudioVae(VaeConfig config = {}, std::uint64_t seed = 0);
    AudioVae(const AudioVae&) = delete;
    AudioVae& operator=(const AudioVae&) = delete;
    AudioVae(AudioVae&&) = default;
    AudioVae& operator=(AudioVae&&) = default;

    const VaeConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Deterministic given the parameters. Input is right-padded with zeros
    /// to a multiple of r.
    VaePosterior encode(const Waveform& audio) const;

    /// Returns T' * r samples per channel, clipped to [-1, 1].
    Waveform decode(const Matrix& latent, int rate) const;

    /// One optimizer step on reconstruction MSE + kl_weight * mean KL.
    VaeLoss train_step(const std::vector<Waveform>& batch, AdamW& optimizer, Rng& rng);

    /// Loss of one waveform without touching parameters.
    VaeLoss evaluate(const Waveform& audio, Rng& rng) const;

    /// Multiplier mapping sampled latents to unit variance for diffusion.
    double latent_scale() const { return latent_scale_; }
    void set_latent_scale(double s) { latent_scale_ = s; }

    void save(TensorContainer& out) const;
    static AudioVae load(const TensorContainer& in);

    /// Graph-building pieces, exposed for gradient checks.
    std::pair<ag::Var, ag::Var> encode_channel(const ag::Var& samples) const;
    ag::Var decode_channel(const ag::Var& latent) const;

private:
    Matrix padded_channel(const Waveform& audio, Eigen::Index channel) const;
    std::pair<ag::Var, VaeLoss> loss_graph(const Waveform& audio, Rng& rng) const;

    VaeConfig config_;
    ParamStore params_;
    std::vector<Conv1d> down_;
    Conv1d enc_mix_;
    Linear enc_out_;
    Linear dec_in_;
    Conv1d dec_mix_;
    std::vector<Linear> up_;
    double latent_scale_ = 1.0;
};

}  // namespace lova
