// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Noise schedule, forward (noising) process, epsilon-prediction loss and
// classifier-free guidance combination.

#include <cstdint>
#include <string>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/rng.hpp"

namespace lova {

enum class ScheduleKind { cosine, linear };

ScheduleKind parse_schedule_kind(const std::string& name);
const char* to_string(ScheduleKind kind);

/// Precomputed cumulative signal coefficients. Index i is the zero-based
/// diffusion step (step i + 1 in one-based notation). Immutable.
class NoiseSchedule {
public:
    /// Validates that every entry lies in (0, 1] and the table strictly decreases.
    explicit NoiseSchedule(std::vector<double> alpha_bar);

    int num_steps() const { return static_cast<int>(alpha_bar_.size()); }
    double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }
    const std::vector<double>& alpha_bar() const { return alpha_bar_; }

    /// Per-step beta_i = 1 - alpha_bar[i] / alpha_bar[i-1] (alpha_bar[-1] = 1).
    double beta(int t) const;

    /// VE noise level sqrt((1 - alpha_bar) / alpha_bar) at integer step t.
    double sigma(int t) const;
    double sigma_min() const { return sigma(0); }
    double sigma_max() const { return sigma(num_steps() - 1); }

    /// Continuous timestep for a noise level, by linear interpolation of
    /// log-sigma between neighbouring steps; clamped to [0, T-1].
    double t_from_sigma(double sigma) const;
    /// Inverse of `t_from_sigma` on [0, T-1].
    double sigma_at(double t) const;
    double alpha_bar_at(double t) const;

private:
    std::vector<double> alpha_bar_;
    std::vector<double> log_sigma_;
};

/// Cosine: alpha_bar[i] = f(i+1)/f(0), f(t) = cos^2(((t/T)+s)/(1+s) * pi/2),
/// s = 0.008, with the final step's beta clipped at 0.999.
/// Linear: betas evenly spaced on [0.1/T, 20/T], clipped at 0.999.
NoiseSchedule make_schedule(ScheduleKind kind, int num_steps);

struct NoiseDraw {
    Matrix epsilon;
    std::uint64_t seed = 0;

    static NoiseDraw sample(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);
};

/// z_t = sqrt(alpha_bar) * z0 + sqrt(1 - alpha_bar) * eps.
Matrix forward_diffuse(const Matrix& z0, double alpha_bar, const Matrix& eps);
Matrix forward_diffuse(const Matrix& z0, int t, const NoiseDraw& eps, const NoiseSchedule& sched);

/// Mean squared error between predicted and drawn noise.
double denoising_loss(const Matrix& eps_hat, const Matrix& eps);
ag::Var denoising_loss(const ag::Var& eps_hat, const Matrix& eps);

/// eps_uncond + scale * (eps_cond - eps_uncond).
Matrix cfg_combine(const Matrix& eps_cond, const Matrix& eps_uncond, double scale);

}  // namespace lova
