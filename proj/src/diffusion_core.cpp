// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/diffusion_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lova/errors.hpp"

namespace lova {

ScheduleKind parse_schedule_kind(const std::string& name) {
    if (name == "cosine") return ScheduleKind::cosine;
    if (name == "linear") return ScheduleKind::linear;
    throw InvalidArgument("unknown schedule kind '" + name + "' (expected cosine|linear)");
}

const char* to_string(ScheduleKind kind) {
    return kind == ScheduleKind::cosine ? "cosine" : "linear";
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
    if (alpha_bar_.size() < 2) throw InvalidArgument("noise schedule needs at least 2 steps");
    for (std::size_t i = 0; i < alpha_bar_.size(); ++i) {
        const double a = alpha_bar_[i];
        if (!(a > 0.0 && a <= 1.0))
            throw InvalidArgument("alpha_bar[" + std::to_string(i) + "] = " + std::to_string(a) +
                                  " outside (0, 1]");
        if (i > 0 && !(a < alpha_bar_[i - 1]))
            throw InvalidArgument("alpha_bar must be strictly decreasing (index " +
                                  std::to_string(i) + ")");
    }
    log_sigma_.reserve(alpha_bar_.size());
    for (double a : alpha_bar_) log_sigma_.push_back(0.5 * std::log((1.0 - a) / a));
}

double NoiseSchedule::beta(int t) const {
    const double prev = t == 0 ? 1.0 : alpha_bar(t - 1);
    return 1.0 - alpha_bar(t) / prev;
}

double NoiseSchedule::sigma(int t) const {
    const double a = alpha_bar(t);
    return std::sqrt((1.0 - a) / a);
}

double NoiseSchedule::t_from_sigma(double sigma) const {
    const double ls = std::log(sigma);
    if (!(ls > log_sigma_.front())) return 0.0;
    if (ls >= log_sigma_.back()) return static_cast<double>(num_steps() - 1);
    const auto it = std::upper_bound(log_sigma_.begin(), log_sigma_.end(), ls);
    const auto hi = static_cast<std::size_t>(it - log_sigma_.begin());
    const std::size_t lo = hi - 1;
    const double w = (ls - log_sigma_[lo]) / (log_sigma_[hi] - log_sigma_[lo]);
    return static_cast<double>(lo) + w;
}

double NoiseSchedule::sigma_at(double t) const {
    const double tc = std::clamp(t, 0.0, static_cast<double>(num_steps() - 1));
    const auto lo = static_cast<std::size_t>(std::floor(tc));
    const std::size_t hi = std::min(lo + 1, log_sigma_.size() - 1);
    const double w = tc - static_cast<double>(lo);
    return std::exp((1.0 - w) * log_sigma_[lo] + w * log_sigma_[hi]);
}

double NoiseSchedule::alpha_bar_at(double t) const {
    const double s = sigma_at(t);
    return 1.0 / (1.0 + s * s);
}

NoiseSchedule make_schedule(ScheduleKind kind, int num_steps) {
    if (num_steps < 2)
        throw InvalidArgument("make_schedule: num_steps must be >= 2, got " +
                              std::to_string(num_steps));
    constexpr double kMaxBeta = 0.999;
    const double n = static_cast<double>(num_steps);
    std::vector<double> alpha_bar(static_cast<std::size_t>(num_steps));
    if (kind == ScheduleKind::cosine) {
        constexpr double s = 0.008;
        auto f = [&](double t) {
            const double c = std::cos(((t / n) + s) / (1.0 + s) * std::numbers::pi / 2.0);
            return c * c;
        };
        const double f0 = f(0.0);
        double prev = 1.0;
        for (int i = 0; i < num_steps; ++i) {
            const double target = f(i + 1.0) / f0;
            const double beta = std::min(1.0 - target / prev, kMaxBeta);
            // Keep the closed form exactly where the clip is inactive.
            prev = beta < kMaxBeta ? target : prev * (1.0 - beta);
            alpha_bar[static_cast<std::size_t>(i)] = prev;
        }
    } else {
        const double lo = 0.1 / n, hi = 20.0 / n;
        double prod = 1.0;
        for (int i = 0; i < num_steps; ++i) {
            const double beta = std::min(lo + (hi - lo) * i / (n - 1.0), kMaxBeta);
            prod *= 1.0 - beta;
            alpha_bar[static_cast<std::size_t>(i)] = prod;
        }
    }
    return NoiseSchedule(std::move(alpha_bar));
}

NoiseDraw NoiseDraw::sample(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    NoiseDraw d;
    d.seed = seed;
    d.epsilon.resize(rows, cols);
    Rng rng(seed);
    rng.fill_normal(d.epsilon);
    return d;
}

Matrix forward_diffuse(const Matrix& z0, double alpha_bar, const Matrix& eps) {
    if (z0.rows() != eps.rows() || z0.cols() != eps.cols())
        throw InvalidArgument("forward_diffuse: noise shape differs from latent shape");
    return std::sqrt(alpha_bar) * z0 + std::sqrt(1.0 - alpha_bar) * eps;
}

Matrix forward_diffuse(const Matrix& z0, int t, const NoiseDraw& eps, const NoiseSchedule& sched) {
    if (t < 0 || t >= sched.num_steps())
        throw InvalidArgument("forward_diffuse: timestep " + std::to_string(t) + " out of range");
    return forward_diffuse(z0, sched.alpha_bar(t), eps.epsilon);
}

double denoising_loss(const Matrix& eps_hat, const Matrix& eps) {
    if (eps_hat.rows() != eps.rows() || eps_hat.cols() != eps.cols())
        throw InvalidArgument("denoising_loss: shape mismatch");
    if (eps.size() == 0) return 0.0;
    return (eps_hat - eps).squaredNorm() / static_cast<double>(eps.size());
}

ag::Var denoising_loss(const ag::Var& eps_hat, const Matrix& eps) {
    return ag::mse(eps_hat, ag::constant(eps));
}

Matrix cfg_combine(const Matrix& eps_cond, const Matrix& eps_uncond, double scale) {
    if (eps_cond.rows() != eps_uncond.rows() || eps_cond.cols() != eps_uncond.cols())
        throw InvalidArgument("cfg_combine: shape mismatch");
    if (scale == 1.0) return eps_cond;
    return eps_uncond + scale * (eps_cond - eps_uncond);
}

}  // namespace lova
