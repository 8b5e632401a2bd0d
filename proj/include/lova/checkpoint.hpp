// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Single-file binary tensor container.
//
//   magic      8 bytes  "LOVACKPT"
//   version    u32
//   count      u32      number of tensors
//   tensor*    name_len u16, name bytes, rank u8, dims u32[rank],
//              dtype u8, raw little-endian data
//
// All integers are little-endian. Tensors keep insertion order, so writing
// the same content twice yields identical bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/params.hpp"

namespace lova {

enum class DType : std::uint8_t { f64 = 0, f32 = 1, u8 = 2, i64 = 3 };

struct TensorBlob {
    DType dtype = DType::f64;
    std::vector<std::uint32_t> dims;
    std::vector<unsigned char> bytes;
};

class TensorContainer {
public:
    static constexpr char kMagic[9] = "LOVACKPT";
    static constexpr std::uint32_t kVersion = 1;

    void put(const std::string& name, const Matrix& m);
    void put_string(const std::string& name, const std::string& s);
    void put_int(const std::string& name, std::int64_t v);
    void put_params(const std::string& prefix, const ParamStore& store);

    bool contains(const std::string& name) const { return blobs_.count(name) != 0; }
    Matrix get_matrix(const std::string& name) const;
    std::string get_string(const std::string& name) const;
    std::int64_t get_int(const std::string& name) const;
    /// Loads every `prefix + name` tensor into the matching parameter.
    void get_params(const std::string& prefix, ParamStore& store) const;

    const std::vector<std::string>& names() const { return order_; }
    const TensorBlob& blob(const std::string& name) const;

    std::vector<unsigned char> serialize() const;
    static TensorContainer deserialize(const std::vector<unsigned char>& bytes,
                                       const std::string& origin = "<memory>");

    void save(const std::filesystem::path& path) const;
    static TensorContainer load(const std::filesystem::path& path);

private:
    void put_blob(const std::string& name, TensorBlob blob);

    std::vector<std::string> order_;
    std::map<std::string, TensorBlob> blobs_;
};

}  // namespace lova
