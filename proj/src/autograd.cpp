// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "lova/errors.hpp"

namespace lova::ag {
namespace {

thread_local bool g_grad_enabled = true;

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument(std::string(op) + ": shape mismatch [" + std::to_string(a.rows()) +
                              "," + std::to_string(a.cols()) + "] vs [" +
                              std::to_string(b.rows()) + "," + std::to_string(b.cols()) + "]");
}

Var make_result(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    if (g_grad_enabled) {
        for (const auto& in : inputs) {
            if (in.requires_grad()) {
                node->requires_grad = true;
                break;
            }
        }
        if (node->requires_grad) {
            node->parents.reserve(inputs.size());
            for (auto& in : inputs) node->parents.push_back(in.node());
            node->backward = std::move(fn);
        }
    }
    return Var(std::move(node));
}

inline void push(Node& self, std::size_t i, const Matrix& g) {
    auto& p = self.parents[i];
    if (p->requires_grad) p->accumulate(g);
}

inline bool wants(Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

}  // namespace

void Node::accumulate(const Matrix& g) {
    if (grad.size() == 0)
        grad = g;
    else
        grad += g;
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var constant(Matrix value) { return Var(std::move(value), false); }

void backward(const Var& root) {
    if (root.rows() != 1 || root.cols() != 1)
        throw InvalidArgument("backward: root must be a 1x1 scalar");
    if (!root.requires_grad()) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    root.node()->accumulate(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->grad.size() != 0) n->backward(*n);
    }
    // Intermediate gradients are no longer needed; leaves keep theirs.
    for (Node* n : order)
        if (!n->parents.empty()) n->grad.resize(0, 0);
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows())
        throw InvalidArgument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                              " vs " + std::to_string(b.rows()) + ")");
    Matrix out = a.value() * b.value();
    return make_result(std::move(out), {a, b}, [](Node& s) {
        const Matrix& av = s.parents[0]->value;
        const Matrix& bv = s.parents[1]->value;
        if (wants(s, 0)) push(s, 0, s.grad * bv.transpose());
        if (wants(s, 1)) push(s, 1, av.transpose() * s.grad);
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    if (a.cols() != b.cols()) throw InvalidArgument("matmul_nt: feature dimensions differ");
    Matrix out = a.value() * b.value().transpose();
    return make_result(std::move(out), {a, b}, [](Node& s) {
        const Matrix& av = s.parents[0]->value;
        const Matrix& bv = s.parents[1]->value;
        if (wants(s, 0)) push(s, 0, s.grad * bv);
        if (wants(s, 1)) push(s, 1, s.grad.transpose() * av);
    });
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    return make_result(a.value() + b.value(), {a, b}, [](Node& s) {
        push(s, 0, s.grad);
        push(s, 1, s.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    return make_result(a.value() - b.value(), {a, b}, [](Node& s) {
        push(s, 0, s.grad);
        if (wants(s, 1)) push(s, 1, -s.grad);
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& s) {
        if (wants(s, 0)) push(s, 0, s.grad.cwiseProduct(s.parents[1]->value));
        if (wants(s, 1)) push(s, 1, s.grad.cwiseProduct(s.parents[0]->value));
    });
}

Var scale(const Var& a, double k) {
    return make_result(a.value() * k, {a}, [k](Node& s) { push(s, 0, s.grad * k); });
}

Var add_scalar(const Var& a, double k) {
    Matrix out = a.value().array() + k;
    return make_result(std::move(out), {a}, [](Node& s) { push(s, 0, s.grad); });
}

Var add_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw InvalidArgument("add_row: row must be [1, " + std::to_string(a.cols()) + "]");
    Matrix out = a.value().rowwise() + row.value().row(0);
    return make_result(std::move(out), {a, row}, [](Node& s) {
        push(s, 0, s.grad);
        if (wants(s, 1)) push(s, 1, s.grad.colwise().sum());
    });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
    const Eigen::Index n = x.rows(), d = x.cols();
    if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d)
        throw InvalidArgument("layer_norm: gain/bias must be [1, features]");
    Matrix xhat(n, d);
    Eigen::VectorXd rstd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = x.value().row(i).mean();
        const double var = (x.value().row(i).array() - mu).square().mean();
        rstd(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (x.value().row(i).array() - mu) * rstd(i);
    }
    Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() +
                 bias.value().row(0).array();
    return make_result(std::move(out), {x, gain, bias},
                       [xhat = std::move(xhat), rstd = std::move(rstd)](Node& s) {
                           const Matrix& g = s.grad;
                           const auto gamma = s.parents[1]->value.row(0).array();
                           if (wants(s, 0)) {
                               Matrix dxhat = g.array().rowwise() * gamma;
                               const Eigen::Index d = dxhat.cols();
                               Matrix dx(dxhat.rows(), d);
                               for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
                                   const double m1 = dxhat.row(i).mean();
                                   const double m2 = dxhat.row(i).dot(xhat.row(i)) / double(d);
                                   dx.row(i) = rstd(i) * (dxhat.row(i).array() - m1 -
                                                          xhat.row(i).array() * m2);
                               }
                               push(s, 0, dx);
                           }
                           if (wants(s, 1)) push(s, 1, g.cwiseProduct(xhat).colwise().sum());
                           if (wants(s, 2)) push(s, 2, g.colwise().sum());
                       });
}

Var softmax_rows(const Var& x) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double m = x.value().row(i).maxCoeff();
        out.row(i) = (x.value().row(i).array() - m).exp();
        out.row(i) /= out.row(i).sum();
    }
    return make_result(std::move(out), {x}, [](Node& s) {
        const Matrix& y = s.value;
        Eigen::VectorXd dots = s.grad.cwiseProduct(y).rowwise().sum();
        Matrix dx = y.array() * (s.grad.colwise() - dots).array();
        push(s, 0, dx);
    });
}

namespace {
constexpr double kSqrt2OverPi = 0.7978845608028654;
constexpr double kGeluCubic = 0.044715;
}  // namespace

Var gelu(const Var& x) {
    Matrix out = x.value().unaryExpr([](double v) {
        return 0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + kGeluCubic * v * v * v)));
    });
    return make_result(std::move(out), {x}, [](Node& s) {
        Matrix d = s.parents[0]->value.unaryExpr([](double v) {
            const double u = kSqrt2OverPi * (v + kGeluCubic * v * v * v);
            const double th = std::tanh(u);
            const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
            return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
        });
        push(s, 0, s.grad.cwiseProduct(d));
    });
}

Var silu(const Var& x) {
    Matrix out = x.value().unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
    return make_result(std::move(out), {x}, [](Node& s) {
        Matrix d = s.parents[0]->value.unaryExpr([](double v) {
            const double sg = 1.0 / (1.0 + std::exp(-v));
            return sg * (1.0 + v * (1.0 - sg));
        });
        push(s, 0, s.grad.cwiseProduct(d));
    });
}

Var elu(const Var& x) {
    Matrix out = x.value().unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
    return make_result(std::move(out), {x}, [](Node& s) {
        Matrix d = s.parents[0]->value.unaryExpr(
            [](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
        push(s, 0, s.grad.cwiseProduct(d));
    });
}

Var exp(const Var& x) {
    Matrix out = x.value().array().exp();
    return make_result(std::move(out), {x},
                       [](Node& s) { push(s, 0, s.grad.cwiseProduct(s.value)); });
}

Var square(const Var& x) {
    Matrix out = x.value().array().square();
    return make_result(std::move(out), {x}, [](Node& s) {
        push(s, 0, 2.0 * s.grad.cwiseProduct(s.parents[0]->value));
    });
}

Var clamp(const Var& x, double lo, double hi) {
    Matrix out = x.value().cwiseMax(lo).cwiseMin(hi);
    return make_result(std::move(out), {x}, [lo, hi](Node& s) {
        const Matrix& v = s.parents[0]->value;
        Matrix g = s.grad;
        for (Eigen::Index i = 0; i < g.size(); ++i)
            if (v.data()[i] < lo || v.data()[i] > hi) g.data()[i] = 0.0;
        push(s, 0, g);
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_rows: no inputs");
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw InvalidArgument("concat_rows: column counts differ");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    std::vector<Eigen::Index> offsets;
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        offsets.push_back(r);
        out.middleRows(r, p.rows()) = p.value();
        r += p.rows();
    }
    return make_result(std::move(out), parts, [offsets](Node& s) {
        for (std::size_t i = 0; i < s.parents.size(); ++i)
            if (wants(s, i))
                push(s, i, s.grad.middleRows(offsets[i], s.parents[i]->value.rows()));
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw InvalidArgument("concat_cols: row counts differ");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::vector<Eigen::Index> offsets;
    Eigen::Index c = 0;
    for (const auto& p : parts) {
        offsets.push_back(c);
        out.middleCols(c, p.cols()) = p.value();
        c += p.cols();
    }
    return make_result(std::move(out), parts, [offsets](Node& s) {
        for (std::size_t i = 0; i < s.parents.size(); ++i)
            if (wants(s, i))
                push(s, i, s.grad.middleCols(offsets[i], s.parents[i]->value.cols()));
    });
}

Var slice_rows(const Var& x, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > x.rows())
        throw InvalidArgument("slice_rows: range out of bounds");
    Matrix out = x.value().middleRows(start, count);
    return make_result(std::move(out), {x}, [start](Node& s) {
        Matrix g = Matrix::Zero(s.parents[0]->value.rows(), s.parents[0]->value.cols());
        g.middleRows(start, s.grad.rows()) = s.grad;
        push(s, 0, g);
    });
}

Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > x.cols())
        throw InvalidArgument("slice_cols: range out of bounds");
    Matrix out = x.value().middleCols(start, count);
    return make_result(std::move(out), {x}, [start](Node& s) {
        Matrix g = Matrix::Zero(s.parents[0]->value.rows(), s.parents[0]->value.cols());
        g.middleCols(start, s.grad.cols()) = s.grad;
        push(s, 0, g);
    });
}

Var reshape(const Var& x, Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != x.value().size()) throw InvalidArgument("reshape: element count differs");
    Matrix out = Eigen::Map<const Matrix>(x.value().data(), rows, cols);
    return make_result(std::move(out), {x}, [](Node& s) {
        const Matrix& pv = s.parents[0]->value;
        push(s, 0, Eigen::Map<const Matrix>(s.grad.data(), pv.rows(), pv.cols()));
    });
}

Var im2col(const Var& x, int kernel, int stride, int pad_left, int pad_right) {
    const Eigen::Index t = x.rows(), c = x.cols();
    const Eigen::Index span = t + pad_left + pad_right;
    if (kernel < 1 || stride < 1 || span < kernel)
        throw InvalidArgument("im2col: invalid kernel/stride for input length");
    const Eigen::Index t_out = (span - kernel) / stride + 1;
    Matrix out = Matrix::Zero(t_out, kernel * c);
    for (Eigen::Index o = 0; o < t_out; ++o)
        for (int k = 0; k < kernel; ++k) {
            const Eigen::Index src = o * stride + k - pad_left;
            if (src >= 0 && src < t) out.block(o, k * c, 1, c) = x.value().row(src);
        }
    return make_result(std::move(out), {x}, [kernel, stride, pad_left](Node& s) {
        const Matrix& xv = s.parents[0]->value;
        const Eigen::Index t = xv.rows(), c = xv.cols();
        Matrix g = Matrix::Zero(t, c);
        for (Eigen::Index o = 0; o < s.grad.rows(); ++o)
            for (int k = 0; k < kernel; ++k) {
                const Eigen::Index src = o * stride + k - pad_left;
                if (src >= 0 && src < t) g.row(src) += s.grad.block(o, k * c, 1, c);
            }
        push(s, 0, g);
    });
}

Var sum(const Var& x) {
    Matrix out(1, 1);
    out(0, 0) = x.value().sum();
    return make_result(std::move(out), {x}, [](Node& s) {
        const Matrix& pv = s.parents[0]->value;
        push(s, 0, Matrix::Constant(pv.rows(), pv.cols(), s.grad(0, 0)));
    });
}

Var mean(const Var& x) {
    const double n = static_cast<double>(x.value().size());
    Matrix out(1, 1);
    out(0, 0) = x.value().sum() / n;
    return make_result(std::move(out), {x}, [n](Node& s) {
        const Matrix& pv = s.parents[0]->value;
        push(s, 0, Matrix::Constant(pv.rows(), pv.cols(), s.grad(0, 0) / n));
    });
}

Var mse(const Var& a, const Var& b) {
    require_same_shape(a, b, "mse");
    const double n = static_cast<double>(a.value().size());
    Matrix diff = a.value() - b.value();
    Matrix out(1, 1);
    out(0, 0) = diff.squaredNorm() / n;
    return make_result(std::move(out), {a, b}, [diff = std::move(diff), n](Node& s) {
        const double k = 2.0 * s.grad(0, 0) / n;
        if (wants(s, 0)) push(s, 0, k * diff);
        if (wants(s, 1)) push(s, 1, -k * diff);
    });
}

}  // namespace lova::ag
