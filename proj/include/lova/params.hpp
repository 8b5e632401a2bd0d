// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lova/autograd.hpp"

namespace lova {

/// Named, ordered registry of trainable tensors.
class ParamStore {
public:
    ag::Var add(const std::string& name, Matrix init);

    ag::Var at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    const std::vector<std::string>& names() const { return order_; }

    std::size_t size() const { return order_.size(); }
    /// Number of scalar parameters, optionally restricted by `filter`.
    std::size_t count(const std::function<bool(const std::string&)>& filter = {}) const;

    void zero_grad();

    /// Copies values (not graph state) from `other`; names and shapes must match.
    void copy_values_from(const ParamStore& other);

private:
    std::vector<std::string> order_;
    std::map<std::string, ag::Var> params_;
};

/// FNV-1a over raw bytes.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

/// Checksum of the named parameter values selected by `filter`, in name order.
std::uint64_t checksum(const ParamStore& store,
                       const std::function<bool(const std::string&)>& filter = {});

}  // namespace lova
