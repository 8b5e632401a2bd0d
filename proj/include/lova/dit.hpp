// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Diffusion Transformer noise predictor.
//
//   z_t ─► + PE_z ─► input proj ─► [t-token ; tokens] ─► depth × block ─► head ─► drop t-token
//
// Each block is pre-norm residual: self-attention, cross-attention over the
// (position-added) condition rows, then an MLP. The head is zero-initialised
// so a fresh model predicts zero noise.

#include <cstdint>
#include <string>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/conditioning.hpp"
#include "lova/layers.hpp"
#include "lova/params.hpp"

namespace lova {

struct DiTConfig {
    int depth = 4;
    int heads = 4;
    /// Transformer width.
    int token_dim = 128;
    /// Width of latent tokens (audio channels * VAE latent dim).
    int latent_dim = 32;
    /// Width of condition rows (h_C).
    int cond_dim = 11;
    double mlp_ratio = 4.0;
    /// PE_z capacity in latent tokens.
    int max_tokens = 1500;
    /// PE_c capacity in condition rows.
    int max_cond = 480;

    void validate() const;
    int mlp_hidden() const;
};

/// Parameter groups of the registry: "pe_z", "pe_c", "null_cond", "input",
/// "time_embed", "blocks.<i>", "head".
std::string parameter_group(const std::string& name);

/// Scalar parameter count implied by a config.
std::size_t parameter_count(const DiTConfig& config);

class DiT {
public:
    explicit DiT(DiTConfig config, std::uint64_t seed = 0);
    DiT(const DiT&) = delete;
    DiT& operator=(const DiT&) = delete;
    DiT(DiT&&) = default;
    DiT& operator=(DiT&&) = default;

    const DiTConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const PositionTable& pe_z() const { return pe_z_; }
    const PositionTable& pe_c() const { return pe_c_; }

    /// Predicted noise for raw condition features `c` (PE_c is added here).
    Matrix denoise(const Matrix& z_t, const Matrix& c, double t) const;
    /// Predicted noise for a context that already carries its positions.
    Matrix denoise_context(const Matrix& z_t, const Matrix& context, double t) const;
    /// Cross-attends to the learned null row only.
    Matrix denoise_unconditional(const Matrix& z_t, double t) const;

    /// Differentiable pieces used by the trainer.
    ag::Var condition(const Matrix& c) const;
    ag::Var null_context(Eigen::Index rows) const;
    ag::Var forward(const ag::Var& z_t, const ag::Var& context, double t) const;

    /// Sinusoidal features of a (possibly fractional) timestep, [1, token_dim].
    Matrix timestep_features(double t) const;
    /// Embedded timestep token, [1, token_dim].
    Matrix timestep_embedding(double t) const;

    /// Human-readable registry summary with per-group counts.
    std::string describe() const;

private:
    struct Attention {
        Linear q, k, v, o;
    };
    struct Block {
        LayerNorm norm1, norm2, norm3;
        Attention self_attn, cross_attn;
        Linear fc1, fc2;
    };

    ag::Var attend(const Attention& a, const ag::Var& x, const ag::Var& ctx) const;
    ag::Var time_token(double t) const;

    DiTConfig config_;
    ParamStore params_;
    PositionTable pe_z_;
    PositionTable pe_c_;
    ag::Var null_row_;
    Linear input_;
    Linear time_fc1_, time_fc2_;
    std::vector<Block> blocks_;
    Linear head_;
};

}  // namespace lova
