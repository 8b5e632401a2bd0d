// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lova/checkpoint.hpp"
#include "lova/params.hpp"

namespace lova {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    int warmup_steps = 500;
    /// Global gradient-norm clip; <= 0 disables clipping.
    double clip_norm = 1.0;
};

/// Adam with decoupled weight decay and linear warmup. Weight decay applies
/// only to parameters named "*.weight".
class AdamW {
public:
    explicit AdamW(AdamWConfig config = {}) : config_(config) {}

    /// Updates `trainable` parameters from their accumulated gradients.
    /// Parameters without a gradient are left untouched. Returns the global
    /// gradient norm before clipping.
    double step(ParamStore& params, const std::vector<std::string>& trainable);

    double lr_at(std::int64_t step) const;
    std::int64_t steps() const { return t_; }
    const AdamWConfig& config() const { return config_; }
    void set_config(const AdamWConfig& c) { config_ = c; }

    void save(TensorContainer& out, const std::string& prefix) const;
    void load(const TensorContainer& in, const std::string& prefix);

private:
    AdamWConfig config_;
    std::int64_t t_ = 0;
    std::map<std::string, Matrix> m_;
    std::map<std::string, Matrix> v_;
};

}  // namespace lova
