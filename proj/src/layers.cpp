// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/layers.hpp"

#include <cmath>

namespace lova {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
    Matrix m(rows, cols);
    rng.fill_normal(m);
    return m * stddev;
}

Linear Linear::create(ParamStore& store, const std::string& name, Eigen::Index in,
                      Eigen::Index out, Rng& rng, bool zero) {
    Linear l;
    l.weight = store.add(name + ".weight", zero ? Matrix::Zero(in, out)
                                                : normal_matrix(in, out, 1.0 / std::sqrt(double(in)), rng));
    l.bias = store.add(name + ".bias", Matrix::Zero(1, out));
    return l;
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, Eigen::Index dim) {
    LayerNorm n;
    n.gain = store.add(name + ".gain", Matrix::Ones(1, dim));
    n.bias = store.add(name + ".bias", Matrix::Zero(1, dim));
    return n;
}

Conv1d Conv1d::create(ParamStore& store, const std::string& name, Eigen::Index in,
                      Eigen::Index out, int kernel, int stride, int pad_left, int pad_right,
                      Rng& rng) {
    Conv1d c;
    c.proj = Linear::create(store, name, kernel * in, out, rng);
    c.kernel = kernel;
    c.stride = stride;
    c.pad_left = pad_left;
    c.pad_right = pad_right;
    return c;
}

ag::Var Conv1d::operator()(const ag::Var& x) const {
    if (kernel == 1 && stride == 1 && pad_left == 0 && pad_right == 0) return proj(x);
    return proj(ag::im2col(x, kernel, stride, pad_left, pad_right));
}

}  // namespace lova
