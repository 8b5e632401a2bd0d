// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/optim.hpp"

#include <algorithm>
#include <cmath>

namespace lova {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

double AdamW::lr_at(std::int64_t step) const {
    if (config_.warmup_steps <= 0) return config_.lr;
    const double w = std::min(1.0, static_cast<double>(step) / config_.warmup_steps);
    return config_.lr * w;
}

double AdamW::step(ParamStore& params, const std::vector<std::string>& trainable) {
    double sq = 0.0;
    for (const auto& name : trainable) {
        const ag::Var p = params.at(name);
        if (p.has_grad()) sq += p.grad().squaredNorm();
    }
    const double norm = std::sqrt(sq);
    const double clip =
        (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;

    ++t_;
    const double lr = lr_at(t_);
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (const auto& name : trainable) {
        ag::Var p = params.at(name);
        if (!p.has_grad()) continue;
        const Matrix g = p.grad() * clip;
        auto [mit, m_new] = m_.try_emplace(name, Matrix::Zero(g.rows(), g.cols()));
        auto [vit, v_new] = v_.try_emplace(name, Matrix::Zero(g.rows(), g.cols()));
        Matrix& m = mit->second;
        Matrix& v = vit->second;
        m = config_.beta1 * m + (1.0 - config_.beta1) * g;
        v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
        Matrix& w = p.mutable_value();
        if (lr == 0.0) continue;
        if (config_.weight_decay > 0.0 && ends_with(name, ".weight"))
            w *= 1.0 - lr * config_.weight_decay;
        w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.eps);
    }
    return norm;
}

void AdamW::save(TensorContainer& out, const std::string& prefix) const {
    out.put_int(prefix + "t", t_);
    for (const auto& [name, m] : m_) out.put(prefix + "m." + name, m);
    for (const auto& [name, v] : v_) out.put(prefix + "v." + name, v);
}

void AdamW::load(const TensorContainer& in, const std::string& prefix) {
    m_.clear();
    v_.clear();
    t_ = in.get_int(prefix + "t");
    const std::string pm = prefix + "m.", pv = prefix + "v.";
    for (const auto& name : in.names()) {
        if (name.rfind(pm, 0) == 0) m_[name.substr(pm.size())] = in.get_matrix(name);
        if (name.rfind(pv, 0) == 0) v_[name.substr(pv.size())] = in.get_matrix(name);
    }
}

}  // namespace lova
