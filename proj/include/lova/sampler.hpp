// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-process solvers. Both work from a noise predictor that takes the
// variance-preserving state z_t and a (possibly fractional) timestep.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/diffusion_core.hpp"

namespace lova {

class DiT;

enum class SamplerKind { dpmpp_3m_sde, ddpm_ancestral };

SamplerKind parse_sampler_kind(const std::string& name);
const char* to_string(SamplerKind kind);

struct SamplerConfig {
    int steps = 150;
    double guidance_scale = 5.0;
    SamplerKind kind = SamplerKind::dpmpp_3m_sde;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Conditional / unconditional noise-prediction pair.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual Matrix conditional(const Matrix& z_t, double t) const = 0;
    virtual Matrix unconditional(const Matrix& z_t, double t) const = 0;
    /// Longest latent sequence accepted; <= 0 means unbounded.
    virtual Eigen::Index max_length() const { return 0; }
};

class FunctionNoisePredictor final : public NoisePredictor {
public:
    using Fn = std::function<Matrix(const Matrix&, double)>;
    FunctionNoisePredictor(Fn cond, Fn uncond) : cond_(std::move(cond)), uncond_(std::move(uncond)) {}

    Matrix conditional(const Matrix& z_t, double t) const override { return cond_(z_t, t); }
    Matrix unconditional(const Matrix& z_t, double t) const override { return uncond_(z_t, t); }

private:
    Fn cond_, uncond_;
};

/// A DiT bound to one condition matrix (positions are added once here).
class DiTNoisePredictor final : public NoisePredictor {
public:
    DiTNoisePredictor(const DiT& model, const Matrix& condition);

    Matrix conditional(const Matrix& z_t, double t) const override;
    Matrix unconditional(const Matrix& z_t, double t) const override;
    Eigen::Index max_length() const override;

private:
    const DiT& model_;
    Matrix context_;
};

/// Guided noise estimate; skips the branch whose weight is zero.
Matrix guided_noise(const NoisePredictor& predictor, const Matrix& z_t, double t, double scale);

/// Karras-style sigmas with rho = 7 between the schedule's sigma_max and
/// sigma_min, followed by a 0 sentinel. steps + 1 entries.
std::vector<double> sigma_schedule(const NoiseSchedule& sched, int steps, double rho = 7.0);
std::vector<double> karras_sigmas(double sigma_min, double sigma_max, int steps, double rho = 7.0);

/// Timesteps visited by the strided ancestral sampler, descending.
std::vector<int> ancestral_timesteps(int num_steps, int steps);

/// Draws a [length, dim] latent by solving the reverse process.
Matrix sample(const NoisePredictor& predictor, Eigen::Index length, Eigen::Index dim,
              const NoiseSchedule& sched, const SamplerConfig& config);

}  // namespace lova
