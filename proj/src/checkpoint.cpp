// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "lova/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor container raw data assumes a little-endian host");

namespace lova {
namespace {

void put_le(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::vector<unsigned char>& b, std::string origin) : b_(b), origin_(std::move(origin)) {}

    std::uint64_t le(int bytes) {
        need(static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }

    void raw(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, b_.data() + pos_, n);
        pos_ += n;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > b_.size()) throw IoError("truncated tensor container: " + origin_);
    }

    const std::vector<unsigned char>& b_;
    std::string origin_;
    std::size_t pos_ = 0;
};

std::size_t dtype_size(DType t) {
    switch (t) {
        case DType::f64: return 8;
        case DType::f32: return 4;
        case DType::u8: return 1;
        case DType::i64: return 8;
    }
    throw IoError("unknown dtype tag");
}

}  // namespace

void TensorContainer::put_blob(const std::string& name, TensorBlob blob) {
    if (name.size() > 0xffff) throw InvalidArgument("tensor name too long: " + name);
    if (!blobs_.count(name)) order_.push_back(name);
    blobs_[name] = std::move(blob);
}

void TensorContainer::put(const std::string& name, const Matrix& m) {
    TensorBlob b;
    b.dtype = DType::f64;
    b.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    b.bytes.resize(static_cast<std::size_t>(m.size()) * sizeof(double));
    if (m.size()) std::memcpy(b.bytes.data(), m.data(), b.bytes.size());
    put_blob(name, std::move(b));
}

void TensorContainer::put_string(const std::string& name, const std::string& s) {
    TensorBlob b;
    b.dtype = DType::u8;
    b.dims = {static_cast<std::uint32_t>(s.size())};
    b.bytes.assign(s.begin(), s.end());
    put_blob(name, std::move(b));
}

void TensorContainer::put_int(const std::string& name, std::int64_t v) {
    TensorBlob b;
    b.dtype = DType::i64;
    b.dims = {1};
    b.bytes.resize(8);
    std::memcpy(b.bytes.data(), &v, 8);
    put_blob(name, std::move(b));
}

void TensorContainer::put_params(const std::string& prefix, const ParamStore& store) {
    for (const auto& name : store.names()) put(prefix + name, store.at(name).value());
}

const TensorBlob& TensorContainer::blob(const std::string& name) const {
    auto it = blobs_.find(name);
    if (it == blobs_.end()) throw IoError("tensor not found in container: " + name);
    return it->second;
}

Matrix TensorContainer::get_matrix(const std::string& name) const {
    const auto& b = blob(name);
    if (b.dtype != DType::f64 || b.dims.size() != 2) throw IoError("tensor " + name + " is not an f64 matrix");
    Matrix m(b.dims[0], b.dims[1]);
    if (m.size()) std::memcpy(m.data(), b.bytes.data(), b.bytes.size());
    return m;
}

std::string TensorContainer::get_string(const std::string& name) const {
    const auto& b = blob(name);
    if (b.dtype != DType::u8) throw IoError("tensor " + name + " is not a byte string");
    return std::string(b.bytes.begin(), b.bytes.end());
}

std::int64_t TensorContainer::get_int(const std::string& name) const {
    const auto& b = blob(name);
    if (b.dtype != DType::i64 || b.bytes.size() != 8) throw IoError("tensor " + name + " is not an i64 scalar");
    std::int64_t v;
    std::memcpy(&v, b.bytes.data(), 8);
    return v;
}

void TensorContainer::get_params(const std::string& prefix, ParamStore& store) const {
    for (const auto& name : store.names()) {
        Matrix m = get_matrix(prefix + name);
        ag::Var p = store.at(name);
        if (m.rows() != p.rows() || m.cols() != p.cols())
            throw IoError("shape mismatch for parameter " + name + " in checkpoint");
        p.mutable_value() = std::move(m);
    }
}

std::vector<unsigned char> TensorContainer::serialize() const {
    std::vector<unsigned char> out(kMagic, kMagic + 8);
    put_le(out, kVersion, 4);
    put_le(out, order_.size(), 4);
    for (const auto& name : order_) {
        const auto& b = blobs_.at(name);
        put_le(out, name.size(), 2);
        out.insert(out.end(), name.begin(), name.end());
        put_le(out, b.dims.size(), 1);
        for (auto d : b.dims) put_le(out, d, 4);
        out.push_back(static_cast<unsigned char>(b.dtype));
        out.insert(out.end(), b.bytes.begin(), b.bytes.end());
    }
    return out;
}

TensorContainer TensorContainer::deserialize(const std::vector<unsigned char>& bytes,
                                             const std::string& origin) {
    Reader r(bytes, origin);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw IoError("bad magic in tensor container: " + origin);
    const auto version = r.le(4);
    if (version != kVersion)
        throw IoError("unsupported tensor container version " + std::to_string(version) + ": " + origin);
    const auto count = r.le(4);
    TensorContainer c;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = static_cast<std::size_t>(r.le(2));
        std::string name(len, '\0');
        r.raw(name.data(), len);
        TensorBlob b;
        const auto rank = r.le(1);
        std::size_t n = 1;
        for (std::uint64_t k = 0; k < rank; ++k) {
            b.dims.push_back(static_cast<std::uint32_t>(r.le(4)));
            n *= b.dims.back();
        }
        b.dtype = static_cast<DType>(r.le(1));
        b.bytes.resize(n * dtype_size(b.dtype));
        r.raw(b.bytes.data(), b.bytes.size());
        c.put_blob(name, std::move(b));
    }
    return c;
}

void TensorContainer::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

TensorContainer TensorContainer::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes, path.string());
}

}  // namespace lova
