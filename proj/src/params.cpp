// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/params.hpp"

#include <algorithm>

#include "lova/errors.hpp"

namespace lova {

ag::Var ParamStore::add(const std::string& name, Matrix init) {
    if (params_.count(name)) throw RegistryInconsistency("duplicate parameter name: " + name);
    ag::Var v(std::move(init), true);
    params_.emplace(name, v);
    order_.push_back(name);
    return v;
}

ag::Var ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw RegistryInconsistency("unknown parameter: " + name);
    return it->second;
}

std::size_t ParamStore::count(const std::function<bool(const std::string&)>& filter) const {
    std::size_t n = 0;
    for (const auto& [name, v] : params_)
        if (!filter || filter(name)) n += static_cast<std::size_t>(v.value().size());
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, v] : params_) v.zero_grad();
}

void ParamStore::copy_values_from(const ParamStore& other) {
    for (const auto& name : order_) {
        const Matrix& src = other.at(name).value();
        Matrix& dst = params_.at(name).mutable_value();
        if (src.rows() != dst.rows() || src.cols() != dst.cols())
            throw RegistryInconsistency("shape mismatch copying parameter " + name);
        dst = src;
    }
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t checksum(const ParamStore& store,
                       const std::function<bool(const std::string&)>& filter) {
    std::vector<std::string> names = store.names();
    std::sort(names.begin(), names.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& name : names) {
        if (filter && !filter(name)) continue;
        const Matrix& v = store.at(name).value();
        h = fnv1a(name.data(), name.size(), h);
        h = fnv1a(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double), h);
    }
    return h;
}

}  // namespace lova
