// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/audio_vae.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lova/errors.hpp"

namespace lova {

int VaeConfig::compression_ratio() const {
    int r = 1;
    for (int s : strides) r *= s;
    return r;
}

Eigen::Index latent_length(Eigen::Index samples, int compression_ratio) {
    return (samples + compression_ratio - 1) / compression_ratio;
}

double kl_to_standard_normal(const Matrix& mean, const Matrix& log_variance) {
    return 0.5 * (mean.array().square() + log_variance.array().exp() - 1.0 - log_variance.array()).sum();
}

Matrix vae_sample(const VaePosterior& posterior, Rng& rng) {
    Matrix n(posterior.mean.rows(), posterior.mean.cols());
    rng.fill_normal(n);
    return posterior.mean.array() + (0.5 * posterior.log_variance.array()).exp() * n.array();
}

Matrix vae_sample(const VaePosterior& posterior, std::uint64_t seed) {
    Rng rng(seed);
    return vae_sample(posterior, rng);
}

AudioVae::AudioVae(VaeConfig config, std::uint64_t seed) : config_(std::move(config)) {
    if (config_.channels < 1 || config_.channels > 2) throw InvalidArgument("VAE supports 1 or 2 channels");
    if (config_.strides.empty()) throw InvalidArgument("VAE needs at least one stride");
    for (int s : config_.strides)
        if (s < 1) throw InvalidArgument("VAE strides must be positive");
    if (config_.latent_dim < 1 || config_.hidden < 1) throw InvalidArgument("VAE dims must be positive");

    Rng rng(seed);
    const int stages = static_cast<int>(config_.strides.size());
    std::vector<Eigen::Index> width(static_cast<std::size_t>(stages) + 1);
    width[0] = 1;
    for (int i = 1; i <= stages; ++i)
        width[static_cast<std::size_t>(i)] =
            i == stages ? config_.hidden : std::max(16, config_.hidden >> (stages - i));

    for (int i = 0; i < stages; ++i) {
        const int s = config_.strides[static_cast<std::size_t>(i)];
        down_.push_back(Conv1d::create(params_, "encoder.down." + std::to_string(i),
                                       width[static_cast<std::size_t>(i)],
                                       width[static_cast<std::size_t>(i) + 1], s, s, 0, 0, rng));
    }
    const Eigen::Index h = config_.hidden;
    enc_mix_ = Conv1d::create(params_, "encoder.mix", h, h, 3, 1, 1, 1, rng);
    enc_out_ = Linear::create(params_, "encoder.out", h, 2 * config_.latent_dim, rng);
    dec_in_ = Linear::create(params_, "decoder.in", config_.latent_dim, h, rng);
    dec_mix_ = Conv1d::create(params_, "decoder.mix", h, h, 3, 1, 1, 1, rng);
    up_.resize(static_cast<std::size_t>(stages));
    for (int i = stages - 1; i >= 0; --i) {
        const auto ui = static_cast<std::size_t>(i);
        up_[ui] = Linear::create(params_, "decoder.up." + std::to_string(i), width[ui + 1],
                                 config_.strides[ui] * width[ui], rng);
    }
    // Start with a small posterior variance so early reconstructions are informative.
    enc_out_.bias.mutable_value().rightCols(config_.latent_dim).setConstant(-4.0);
}

std::pair<ag::Var, ag::Var> AudioVae::encode_channel(const ag::Var& samples) const {
    ag::Var h = samples;
    for (const auto& conv : down_) h = ag::elu(conv(h));
    h = ag::add(h, ag::elu(enc_mix_(h)));
    ag::Var out = enc_out_(h);
    const Eigen::Index d = config_.latent_dim;
    ag::Var mean = ag::slice_cols(out, 0, d);
    ag::Var logvar = ag::clamp(ag::slice_cols(out, d, d), kLogVarMin, kLogVarMax);
    return {mean, logvar};
}

ag::Var AudioVae::decode_channel(const ag::Var& latent) const {
    ag::Var h = ag::elu(dec_in_(latent));
    h = ag::add(h, ag::elu(dec_mix_(h)));
    for (int i = static_cast<int>(up_.size()) - 1; i >= 0; --i) {
        const auto ui = static_cast<std::size_t>(i);
        h = up_[ui](h);
        const Eigen::Index s = config_.strides[ui];
        h = ag::reshape(h, h.rows() * s, h.cols() / s);
        if (i > 0) h = ag::elu(h);
    }
    return h;
}

Matrix AudioVae::padded_channel(const Waveform& audio, Eigen::Index channel) const {
    const int r = config_.compression_ratio();
    const Eigen::Index t = audio.num_samples();
    Matrix x = Matrix::Zero(latent_length(t, r) * r, 1);
    x.topRows(t) = audio.samples.col(channel);
    return x;
}

VaePosterior AudioVae::encode(const Waveform& audio) const {
    if (audio.num_samples() < 1) throw InvalidArgument("vae_encode: empty waveform");
    if (audio.channels() != config_.channels)
        throw InvalidArgument("vae_encode: waveform has " + std::to_string(audio.channels()) +
                              " channels, model expects " + std::to_string(config_.channels));
    ag::NoGradGuard no_grad;
    const Eigen::Index len = latent_length(audio.num_samples(), config_.compression_ratio());
    const Eigen::Index d = config_.latent_dim;
    VaePosterior p;
    p.mean.resize(len, config_.token_dim());
    p.log_variance.resize(len, config_.token_dim());
    for (Eigen::Index c = 0; c < audio.channels(); ++c) {
        auto [mean, logvar] = encode_channel(ag::constant(padded_channel(audio, c)));
        p.mean.middleCols(c * d, d) = mean.value();
        p.log_variance.middleCols(c * d, d) = logvar.value();
    }
    return p;
}

Waveform AudioVae::decode(const Matrix& latent, int rate) const {
    if (latent.cols() != config_.token_dim())
        throw InvalidArgument("vae_decode: latent dim " + std::to_string(latent.cols()) +
                              " does not match " + std::to_string(config_.token_dim()));
    ag::NoGradGuard no_grad;
    const int r = config_.compression_ratio();
    const Eigen::Index d = config_.latent_dim;
    Waveform w;
    w.rate = rate;
    w.samples.resize(latent.rows() * r, config_.channels);
    for (Eigen::Index c = 0; c < config_.channels; ++c) {
        ag::Var out = decode_channel(ag::constant(latent.middleCols(c * d, d)));
        w.samples.col(c) = out.value().col(0);
    }
    w.samples = w.samples.unaryExpr([](double v) {
        return std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : 0.0;
    });
    return w;
}

std::pair<ag::Var, VaeLoss> AudioVae::loss_graph(const Waveform& audio, Rng& rng) const {
    if (audio.channels() != config_.channels)
        throw InvalidArgument("vae_train_step: channel mismatch");
    std::vector<ag::Var> recon_terms, kl_terms;
    for (Eigen::Index c = 0; c < audio.channels(); ++c) {
        ag::Var x = ag::constant(padded_channel(audio, c));
        auto [mean, logvar] = encode_channel(x);
        Matrix noise(mean.rows(), mean.cols());
        rng.fill_normal(noise);
        ag::Var z = ag::add(mean, ag::mul(ag::exp(ag::scale(logvar, 0.5)), ag::constant(noise)));
        recon_terms.push_back(ag::mse(decode_channel(z), x));
        ag::Var kl_elems = ag::sub(ag::add(ag::square(mean), ag::exp(logvar)), ag::add_scalar(logvar, 1.0));
        kl_terms.push_back(ag::scale(ag::mean(kl_elems), 0.5));
    }
    ag::Var recon = recon_terms.size() == 1 ? recon_terms[0]
                                            : ag::scale(ag::add(recon_terms[0], recon_terms[1]), 0.5);
    ag::Var kl = kl_terms.size() == 1 ? kl_terms[0] : ag::scale(ag::add(kl_terms[0], kl_terms[1]), 0.5);
    ag::Var total = config_.kl_weight == 0.0 ? recon : ag::add(recon, ag::scale(kl, config_.kl_weight));
    return {total, VaeLoss{total.item(), recon.item(), kl.item()}};
}

VaeLoss AudioVae::evaluate(const Waveform& audio, Rng& rng) const {
    ag::NoGradGuard no_grad;
    return loss_graph(audio, rng).second;
}

VaeLoss AudioVae::train_step(const std::vector<Waveform>& batch, AdamW& optimizer, Rng& rng) {
    if (batch.empty()) throw InvalidArgument("vae_train_step: empty batch");
    params_.zero_grad();
    VaeLoss acc;
    const double w = 1.0 / static_cast<double>(batch.size());
    for (const auto& audio : batch) {
        auto [loss, parts] = loss_graph(audio, rng);
        if (!std::isfinite(parts.total)) {
            std::ostringstream os;
            os << "VAE training diverged: loss=" << parts.total << " reconstruction=" << parts.reconstruction
               << " kl=" << parts.kl << " at optimizer step " << optimizer.steps() << " (batch of "
               << batch.size() << ", " << audio.num_samples() << " samples)";
            throw TrainingDiverged(os.str());
        }
        ag::backward(ag::scale(loss, w));
        acc.total += w * parts.total;
        acc.reconstruction += w * parts.reconstruction;
        acc.kl += w * parts.kl;
    }
    optimizer.step(params_, params_.names());
    return acc;
}

void AudioVae::save(TensorContainer& out) const {
    std::ostringstream strides;
    for (std::size_t i = 0; i < config_.strides.size(); ++i) strides << (i ? "," : "") << config_.strides[i];
    out.put_int("vae.config.channels", config_.channels);
    out.put_string("vae.config.strides", strides.str());
    out.put_int("vae.config.latent_dim", config_.latent_dim);
    out.put_int("vae.config.hidden", config_.hidden);
    Matrix scalars(1, 2);
    scalars << config_.kl_weight, latent_scale_;
    out.put("vae.scalars", scalars);
    out.put_params("vae.param.", params_);
}

AudioVae AudioVae::load(const TensorContainer& in) {
    VaeConfig c;
    c.channels = static_cast<int>(in.get_int("vae.config.channels"));
    c.latent_dim = static_cast<int>(in.get_int("vae.config.latent_dim"));
    c.hidden = static_cast<int>(in.get_int("vae.config.hidden"));
    c.strides.clear();
    std::istringstream is(in.get_string("vae.config.strides"));
    for (std::string tok; std::getline(is, tok, ',');) c.strides.push_back(std::stoi(tok));
    const Matrix scalars = in.get_matrix("vae.scalars");
    c.kl_weight = scalars(0, 0);
    AudioVae vae(c, 0);
    in.get_params("vae.param.", vae.params_);
    vae.latent_scale_ = scalars(0, 1);
    return vae;
}

}  // namespace lova
