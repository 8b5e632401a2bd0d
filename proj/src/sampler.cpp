// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/sampler.hpp"

#include <cmath>

#include "lova/conditioning.hpp"
#include "lova/dit.hpp"
#include "lova/errors.hpp"
#include "lova/rng.hpp"

namespace lova {

namespace {

constexpr double kDenoisedClamp = 10.0;
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kChurnStream = 1;

void check_finite(const Matrix& m, int step) {
    if (!m.allFinite()) throw NumericFailure("non-finite state at sampler step " + std::to_string(step));
}

Matrix clamp_denoised(const Matrix& x0) { return x0.cwiseMax(-kDenoisedClamp).cwiseMin(kDenoisedClamp); }

// Denoised estimate at VE state x = z / sqrt(alpha_bar) with noise level sigma.
Matrix denoised_ve(const NoisePredictor& p, const NoiseSchedule& sched, const Matrix& x, double sigma,
                   double scale) {
    const double t = sched.t_from_sigma(sigma);
    const Matrix z = x / std::sqrt(1.0 + sigma * sigma);
    return clamp_denoised(x - sigma * guided_noise(p, z, t, scale));
}

Matrix sample_dpmpp_3m_sde(const NoisePredictor& p, Eigen::Index length, Eigen::Index dim,
                           const NoiseSchedule& sched, const SamplerConfig& cfg) {
    const std::vector<double> sigmas = sigma_schedule(sched, cfg.steps);
    Rng init(derive_seed(cfg.seed, kInitStream));
    Rng churn(derive_seed(cfg.seed, kChurnStream));

    Matrix x(length, dim);
    init.fill_normal(x);
    x *= std::sqrt(1.0 + sigmas[0] * sigmas[0]);

    constexpr double eta = 1.0;
    Matrix denoised_1, denoised_2;
    double h_1 = 0.0, h_2 = 0.0;
    int history = 0;
    for (int i = 0; i + 1 < static_cast<int>(sigmas.size()); ++i) {
        const double s_cur = sigmas[static_cast<std::size_t>(i)];
        const double s_next = sigmas[static_cast<std::size_t>(i) + 1];
        Matrix denoised = denoised_ve(p, sched, x, s_cur, cfg.guidance_scale);
        if (s_next == 0.0) {
            x = denoised;
            check_finite(x, i);
            break;
        }
        const double h = std::log(s_cur) - std::log(s_next);
        const double h_eta = h * (eta + 1.0);
        x = std::exp(-h_eta) * x + (-std::expm1(-h_eta)) * denoised;
        const double phi_2 = std::expm1(-h_eta) / h_eta + 1.0;
        if (history >= 2) {
            const double r0 = h_1 / h;
            const double r1 = h_2 / h;
            const Matrix d1_0 = (denoised - denoised_1) / r0;
            const Matrix d1_1 = (denoised_1 - denoised_2) / r1;
            const Matrix d1 = d1_0 + (d1_0 - d1_1) * (r0 / (r0 + r1));
            const Matrix d2 = (d1_0 - d1_1) / (r0 + r1);
            const double phi_3 = phi_2 / h_eta - 0.5;
            x += phi_2 * d1 - phi_3 * d2;
        } else if (history == 1) {
            const double r = h_1 / h;
            x += phi_2 * ((denoised - denoised_1) / r);
        }
        Matrix noise(length, dim);
        churn.fill_normal(noise);
        x += noise * (s_next * std::sqrt(-std::expm1(-2.0 * h * eta)));
        check_finite(x, i);

        denoised_2 = std::move(denoised_1);
        denoised_1 = std::move(denoised);
        h_2 = h_1;
        h_1 = h;
        ++history;
    }
    return x;
}

Matrix sample_ddpm(const NoisePredictor& p, Eigen::Index length, Eigen::Index dim, const NoiseSchedule& sched,
                   const SamplerConfig& cfg) {
    const std::vector<int> ts = ancestral_timesteps(sched.num_steps(), cfg.steps);
    Rng init(derive_seed(cfg.seed, kInitStream));
    Rng churn(derive_seed(cfg.seed, kChurnStream));

    Matrix z(length, dim);
    init.fill_normal(z);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const int t = ts[i];
        const double ab = sched.alpha_bar(t);
        const double ab_prev = i + 1 < ts.size() ? sched.alpha_bar(ts[i + 1]) : 1.0;
        const double alpha = ab / ab_prev;
        const double beta = 1.0 - alpha;

        const Matrix eps = guided_noise(p, z, static_cast<double>(t), cfg.guidance_scale);
        const Matrix x0 = clamp_denoised((z - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab));
        z = (std::sqrt(ab_prev) * beta / (1.0 - ab)) * x0 + (std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab)) * z;
        const double var = (1.0 - ab_prev) / (1.0 - ab) * beta;
        if (var > 0.0) {
            Matrix noise(length, dim);
            churn.fill_normal(noise);
            z += std::sqrt(var) * noise;
        }
        check_finite(z, static_cast<int>(i));
    }
    return z;
}

}  // namespace

SamplerKind parse_sampler_kind(const std::string& name) {
    if (name == "dpmpp_3m_sde") return SamplerKind::dpmpp_3m_sde;
    if (name == "ddpm_ancestral") return SamplerKind::ddpm_ancestral;
    throw InvalidArgument("unknown sampler kind '" + name + "' (expected dpmpp_3m_sde or ddpm_ancestral)");
}

const char* to_string(SamplerKind kind) {
    return kind == SamplerKind::dpmpp_3m_sde ? "dpmpp_3m_sde" : "ddpm_ancestral";
}

void SamplerConfig::validate() const {
    if (steps < 1) throw InvalidArgument("sampler steps must be >= 1");
    if (!(guidance_scale >= 0.0)) throw InvalidArgument("guidance scale must be >= 0");
}

DiTNoisePredictor::DiTNoisePredictor(const DiT& model, const Matrix& condition)
    : model_(model), context_(add_positions(condition, model.pe_c())) {}

Matrix DiTNoisePredictor::conditional(const Matrix& z_t, double t) const {
    return model_.denoise_context(z_t, context_, t);
}

Matrix DiTNoisePredictor::unconditional(const Matrix& z_t, double t) const {
    return model_.denoise_unconditional(z_t, t);
}

Eigen::Index DiTNoisePredictor::max_length() const { return model_.config().max_tokens; }

Matrix guided_noise(const NoisePredictor& predictor, const Matrix& z_t, double t, double scale) {
    if (scale == 1.0) return predictor.conditional(z_t, t);
    if (scale == 0.0) return predictor.unconditional(z_t, t);
    return cfg_combine(predictor.conditional(z_t, t), predictor.unconditional(z_t, t), scale);
}

std::vector<double> karras_sigmas(double sigma_min, double sigma_max, int steps, double rho) {
    if (steps < 1) throw InvalidArgument("sigma schedule needs >= 1 step");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    if (steps == 1) {
        out.push_back(sigma_max);
    } else {
        const double a = std::pow(sigma_max, 1.0 / rho);
        const double b = std::pow(sigma_min, 1.0 / rho);
        for (int i = 0; i < steps; ++i)
            out.push_back(std::pow(a + static_cast<double>(i) / (steps - 1) * (b - a), rho));
    }
    out.push_back(0.0);
    return out;
}

std::vector<double> sigma_schedule(const NoiseSchedule& sched, int steps, double rho) {
    return karras_sigmas(sched.sigma_min(), sched.sigma_max(), steps, rho);
}

std::vector<int> ancestral_timesteps(int num_steps, int steps) {
    if (steps < 1) throw InvalidArgument("ancestral sampler needs >= 1 step");
    steps = std::min(steps, num_steps);
    std::vector<int> ts;
    for (int i = steps - 1; i >= 0; --i)
        ts.push_back(static_cast<int>((static_cast<long long>(i) + 1) * num_steps / steps) - 1);
    return ts;
}

Matrix sample(const NoisePredictor& predictor, Eigen::Index length, Eigen::Index dim, const NoiseSchedule& sched,
              const SamplerConfig& config) {
    config.validate();
    if (length < 1 || dim < 1) throw InvalidArgument("sample: latent shape must be positive");
    const Eigen::Index cap = predictor.max_length();
    if (cap > 0 && length > cap)
        throw SequenceTooLong("sample: latent length", static_cast<std::size_t>(length),
                              static_cast<std::size_t>(cap));
    return config.kind == SamplerKind::dpmpp_3m_sde ? sample_dpmpp_3m_sde(predictor, length, dim, sched, config)
                                                    : sample_ddpm(predictor, length, dim, sched, config);
}

}  // namespace lova
