// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Core>

namespace lova {

/// Seeded random stream. The complete state (engine plus the cached value of
/// the normal distribution) round-trips through `state()` / `restore()`.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    template <typename Derived>
    void fill_normal(Eigen::DenseBase<Derived>& out) {
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = normal();
    }

    std::mt19937_64& engine() { return engine_; }

    std::string state() const {
        std::ostringstream os;
        os << engine_ << ' ' << normal_ << ' ' << uniform_;
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> engine_ >> normal_ >> uniform_;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Derives an independent child seed from a parent seed and a stream tag
/// (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace lova
