// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// Every sequence in the library is a [length, features] matrix, so a 2-D
// value type is enough for the VAE, the DiT and the losses. Graphs are built
// eagerly while ops run and freed when the last Var referencing them dies.

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace lova {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

namespace ag {

struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void accumulate(const Matrix& g);
};

class Var {
public:
    Var() = default;
    explicit Var(Matrix value, bool requires_grad = false);
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Matrix& value() const { return node_->value; }
    Matrix& mutable_value() { return node_->value; }
    const Matrix& grad() const { return node_->grad; }
    bool has_grad() const { return node_->grad.size() != 0; }
    void zero_grad() { node_->grad.resize(0, 0); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    bool defined() const { return static_cast<bool>(node_); }

    /// Scalar value of a 1x1 Var.
    double item() const { return node_->value(0, 0); }

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// Whether new ops record their backward closures (thread-local).
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

Var constant(Matrix value);

/// Runs backpropagation from a 1x1 root, accumulating into every reachable
/// Var that requires a gradient.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
/// Adds a [1, C] row to every row of a.
Var add_row(const Var& a, const Var& row);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
Var softmax_rows(const Var& x);
Var gelu(const Var& x);
Var silu(const Var& x);
Var elu(const Var& x);
Var exp(const Var& x);
Var square(const Var& x);
Var clamp(const Var& x, double lo, double hi);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& x, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count);
/// Row-major reinterpretation to [rows, cols].
Var reshape(const Var& x, Eigen::Index rows, Eigen::Index cols);
/// Gathers sliding windows of `kernel` rows (stride `stride`, zero padding)
/// into one row each: [T, C] -> [T_out, kernel * C].
Var im2col(const Var& x, int kernel, int stride, int pad_left, int pad_right);
Var sum(const Var& x);
Var mean(const Var& x);
/// Mean of squared elementwise differences.
Var mse(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace ag
}  // namespace lova
