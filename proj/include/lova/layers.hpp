// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "lova/autograd.hpp"
#include "lova/params.hpp"
#include "lova/rng.hpp"

namespace lova {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

/// y = x W + b, W: [in, out].
struct Linear {
    ag::Var weight;
    ag::Var bias;

    /// LeCun-normal init; `zero` gives an all-zero layer.
    static Linear create(ParamStore& store, const std::string& name, Eigen::Index in,
                         Eigen::Index out, Rng& rng, bool zero = false);

    ag::Var operator()(const ag::Var& x) const { return ag::add_row(ag::matmul(x, weight), bias); }
};

struct LayerNorm {
    ag::Var gain;
    ag::Var bias;

    static LayerNorm create(ParamStore& store, const std::string& name, Eigen::Index dim);

    ag::Var operator()(const ag::Var& x) const { return ag::layer_norm(x, gain, bias); }
};

/// 1-D convolution over rows of a [T, C_in] sequence.
struct Conv1d {
    Linear proj;  // weight [kernel * C_in, C_out]
    int kernel = 1;
    int stride = 1;
    int pad_left = 0;
    int pad_right = 0;

    static Conv1d create(ParamStore& store, const std::string& name, Eigen::Index in,
                         Eigen::Index out, int kernel, int stride, int pad_left, int pad_right,
                         Rng& rng);

    ag::Var operator()(const ag::Var& x) const;
};

}  // namespace lova
