// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/dit.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "lova/errors.hpp"

namespace lova {

void DiTConfig::validate() const {
    if (depth < 1) throw InvalidArgument("DiT depth must be >= 1");
    if (heads < 1 || token_dim % heads != 0)
        throw InvalidArgument("DiT token_dim " + std::to_string(token_dim) + " not divisible by heads " +
                              std::to_string(heads));
    if (token_dim % 2 != 0) throw InvalidArgument("DiT token_dim must be even");
    if (latent_dim < 1 || cond_dim < 1 || max_tokens < 1 || max_cond < 1)
        throw InvalidArgument("DiT dimensions must be positive");
    if (!(mlp_ratio > 0.0)) throw InvalidArgument("DiT mlp_ratio must be positive");
}

int DiTConfig::mlp_hidden() const { return static_cast<int>(std::lround(token_dim * mlp_ratio)); }

std::string parameter_group(const std::string& name) {
    const auto dot = name.find('.');
    const std::string head = name.substr(0, dot);
    if (head == "blocks") {
        const auto dot2 = name.find('.', dot + 1);
        return name.substr(0, dot2);
    }
    if (head == "pe_z" || head == "pe_c" || head == "null_cond" || head == "input" ||
        head == "time_embed" || head == "head")
        return head;
    throw RegistryInconsistency("parameter '" + name + "' belongs to no known group");
}

std::size_t parameter_count(const DiTConfig& c) {
    const std::size_t w = static_cast<std::size_t>(c.token_dim);
    const std::size_t m = static_cast<std::size_t>(c.mlp_hidden());
    const std::size_t lat = static_cast<std::size_t>(c.latent_dim);
    const std::size_t cd = static_cast<std::size_t>(c.cond_dim);
    auto linear = [](std::size_t in, std::size_t out) { return in * out + out; };
    const std::size_t block = 3 * 2 * w                                  // norms
                              + 4 * linear(w, w)                         // self-attention
                              + 2 * linear(w, w) + 2 * linear(cd, w)     // cross-attention
                              + linear(w, m) + linear(m, w);             // mlp
    return static_cast<std::size_t>(c.max_tokens) * lat + static_cast<std::size_t>(c.max_cond) * cd + cd +
           linear(lat, w) + 2 * linear(w, w) + static_cast<std::size_t>(c.depth) * block +
           linear(w, lat);
}

DiT::DiT(DiTConfig config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    const Eigen::Index w = config_.token_dim;
    pe_z_ = PositionTable::create(params_, "pe_z.table", config_.max_tokens, config_.latent_dim, rng);
    pe_c_ = PositionTable::create(params_, "pe_c.table", config_.max_cond, config_.cond_dim, rng);
    null_row_ = params_.add("null_cond.row", normal_matrix(1, config_.cond_dim, 0.02, rng));
    input_ = Linear::create(params_, "input", config_.latent_dim, w, rng);
    time_fc1_ = Linear::create(params_, "time_embed.fc1", w, w, rng);
    time_fc2_ = Linear::create(params_, "time_embed.fc2", w, w, rng);
    for (int i = 0; i < config_.depth; ++i) {
        const std::string p = "blocks." + std::to_string(i) + ".";
        Block b;
        b.norm1 = LayerNorm::create(params_, p + "norm1", w);
        b.self_attn.q = Linear::create(params_, p + "self_attn.q", w, w, rng);
        b.self_attn.k = Linear::create(params_, p + "self_attn.k", w, w, rng);
        b.self_attn.v = Linear::create(params_, p + "self_attn.v", w, w, rng);
        b.self_attn.o = Linear::create(params_, p + "self_attn.o", w, w, rng);
        b.norm2 = LayerNorm::create(params_, p + "norm2", w);
        b.cross_attn.q = Linear::create(params_, p + "cross_attn.q", w, w, rng);
        b.cross_attn.k = Linear::create(params_, p + "cross_attn.k", config_.cond_dim, w, rng);
        b.cross_attn.v = Linear::create(params_, p + "cross_attn.v", config_.cond_dim, w, rng);
        b.cross_attn.o = Linear::create(params_, p + "cross_attn.o", w, w, rng);
        b.norm3 = LayerNorm::create(params_, p + "norm3", w);
        b.fc1 = Linear::create(params_, p + "mlp.fc1", w, config_.mlp_hidden(), rng);
        b.fc2 = Linear::create(params_, p + "mlp.fc2", config_.mlp_hidden(), w, rng);
        blocks_.push_back(std::move(b));
    }
    head_ = Linear::create(params_, "head.proj", w, config_.latent_dim, rng, /*zero=*/true);
}

Matrix DiT::timestep_features(double t) const {
    const Eigen::Index half = config_.token_dim / 2;
    Matrix f(1, config_.token_dim);
    for (Eigen::Index i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        f(0, i) = std::sin(t * freq);
        f(0, half + i) = std::cos(t * freq);
    }
    return f;
}

ag::Var DiT::time_token(double t) const {
    return time_fc2_(ag::silu(time_fc1_(ag::constant(timestep_features(t)))));
}

Matrix DiT::timestep_embedding(double t) const {
    ag::NoGradGuard no_grad;
    return time_token(t).value();
}

ag::Var DiT::attend(const Attention& a, const ag::Var& x, const ag::Var& ctx) const {
    const Eigen::Index heads = config_.heads;
    const Eigen::Index dh = config_.token_dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    ag::Var q = a.q(x), k = a.k(ctx), v = a.v(ctx);
    std::vector<ag::Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (Eigen::Index h = 0; h < heads; ++h) {
        ag::Var qh = heads == 1 ? q : ag::slice_cols(q, h * dh, dh);
        ag::Var kh = heads == 1 ? k : ag::slice_cols(k, h * dh, dh);
        ag::Var vh = heads == 1 ? v : ag::slice_cols(v, h * dh, dh);
        ag::Var p = ag::softmax_rows(ag::scale(ag::matmul_nt(qh, kh), scale));
        outs.push_back(ag::matmul(p, vh));
    }
    return a.o(heads == 1 ? outs[0] : ag::concat_cols(outs));
}

ag::Var DiT::condition(const Matrix& c) const { return add_positions(ag::constant(c), pe_c_); }

ag::Var DiT::null_context(Eigen::Index rows) const {
    if (rows == 1) return null_row_;
    std::vector<ag::Var> parts(static_cast<std::size_t>(rows), null_row_);
    return ag::concat_rows(parts);
}

ag::Var DiT::forward(const ag::Var& z_t, const ag::Var& context, double t) const {
    const Eigen::Index len = z_t.rows();
    if (len < 1) throw InvalidArgument("denoise: empty latent sequence");
    if (len > config_.max_tokens)
        throw SequenceTooLong("denoise: latent sequence", static_cast<std::size_t>(len),
                              static_cast<std::size_t>(config_.max_tokens));
    if (context.rows() > config_.max_cond)
        throw SequenceTooLong("denoise: condition", static_cast<std::size_t>(context.rows()),
                              static_cast<std::size_t>(config_.max_cond));
    if (z_t.cols() != config_.latent_dim)
        throw InvalidArgument("denoise: latent width " + std::to_string(z_t.cols()) + " != " +
                              std::to_string(config_.latent_dim));
    if (context.cols() != config_.cond_dim)
        throw InvalidArgument("denoise: condition width " + std::to_string(context.cols()) + " != " +
                              std::to_string(config_.cond_dim));

    ag::Var x = ag::add(z_t, ag::slice_rows(pe_z_.table(), 0, len));
    ag::Var h = ag::concat_rows({time_token(t), input_(x)});
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& b = blocks_[i];
        ag::Var n1 = b.norm1(h);
        h = ag::add(h, attend(b.self_attn, n1, n1));
        h = ag::add(h, attend(b.cross_attn, b.norm2(h), context));
        h = ag::add(h, b.fc2(ag::gelu(b.fc1(b.norm3(h)))));
        if (!h.value().allFinite())
            throw NumericFailure("non-finite activations after DiT block " + std::to_string(i));
    }
    ag::Var out = head_(h);
    return ag::slice_rows(out, 1, len);
}

Matrix DiT::denoise_context(const Matrix& z_t, const Matrix& context, double t) const {
    ag::NoGradGuard no_grad;
    return forward(ag::constant(z_t), ag::constant(context), t).value();
}

Matrix DiT::denoise(const Matrix& z_t, const Matrix& c, double t) const {
    ag::NoGradGuard no_grad;
    return forward(ag::constant(z_t), condition(c), t).value();
}

Matrix DiT::denoise_unconditional(const Matrix& z_t, double t) const {
    ag::NoGradGuard no_grad;
    return forward(ag::constant(z_t), null_row_, t).value();
}

std::string DiT::describe() const {
    std::map<std::string, std::size_t> groups;
    for (const auto& name : params_.names())
        groups[parameter_group(name)] += static_cast<std::size_t>(params_.at(name).value().size());
    std::ostringstream os;
    os << "DiT depth=" << config_.depth << " heads=" << config_.heads << " token_dim=" << config_.token_dim
       << " latent_dim=" << config_.latent_dim << " cond_dim=" << config_.cond_dim
       << " mlp_ratio=" << config_.mlp_ratio << " max_tokens=" << config_.max_tokens
       << " max_cond=" << config_.max_cond << "\n";
    for (const auto& [g, n] : groups) os << "  " << g << ": " << n << "\n";
    os << "  total: " << params_.count() << "\n";
    return os.str();
}

}  // namespace lova
