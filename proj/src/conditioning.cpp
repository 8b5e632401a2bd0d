// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/conditioning.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "lova/errors.hpp"
#include "lova/layers.hpp"

namespace lova {

Eigen::Index frame_count(double duration_seconds, double fps) {
    if (!(duration_seconds > 0.0) || !(fps > 0.0))
        throw InvalidArgument("frame_count: duration and fps must be positive");
    return std::max<Eigen::Index>(1, std::llround(duration_seconds * fps));
}

RowVector SyntheticFrameEmbedder::embed(const Frame& frame, std::size_t index) const {
    if (static_cast<Eigen::Index>(frame.payload.size()) != dim_)
        throw InvalidArgument("synthetic frame " + std::to_string(index) + " carries " +
                              std::to_string(frame.payload.size()) + " values, expected " +
                              std::to_string(dim_));
    RowVector row(dim_);
    for (Eigen::Index j = 0; j < dim_; ++j) row(j) = frame.payload[static_cast<std::size_t>(j)];
    return row;
}

CachedFeatureEmbedder CachedFeatureEmbedder::from_file(const std::filesystem::path& path) {
    return CachedFeatureEmbedder(read_feature_file(path));
}

RowVector CachedFeatureEmbedder::embed(const Frame&, std::size_t index) const {
    if (static_cast<Eigen::Index>(index) >= features_.rows())
        throw InvalidArgument("cached features have " + std::to_string(features_.rows()) +
                              " rows, frame " + std::to_string(index) + " requested");
    return features_.row(static_cast<Eigen::Index>(index));
}

Matrix extract_features(const FrameSequence& frames, const FrameEmbedder& extractor) {
    const Eigen::Index d = extractor.dim();
    Matrix c(static_cast<Eigen::Index>(frames.size()), d);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        RowVector row;
        try {
            row = extractor.embed(frames.frames[i], i);
        } catch (const std::exception& e) {
            throw InvalidArgument("feature extraction failed at frame " + std::to_string(i) + ": " + e.what());
        }
        if (row.size() != d || !row.allFinite())
            throw InvalidArgument("feature extraction failed at frame " + std::to_string(i) +
                                  ": non-finite or wrongly sized feature vector");
        c.row(static_cast<Eigen::Index>(i)) = row;
    }
    return c;
}

PositionTable PositionTable::create(ParamStore& store, const std::string& name, Eigen::Index max_len,
                                    Eigen::Index dim, Rng& rng) {
    PositionTable pe;
    pe.table_ = store.add(name, normal_matrix(max_len, dim, 0.02, rng));
    return pe;
}

namespace {

void check_positions(Eigen::Index rows, Eigen::Index cols, const PositionTable& pe) {
    if (rows > pe.max_len()) throw SequenceTooLong("add_positions", static_cast<std::size_t>(rows),
                                                   static_cast<std::size_t>(pe.max_len()));
    if (cols != pe.dim())
        throw InvalidArgument("add_positions: feature dim " + std::to_string(cols) +
                              " differs from table dim " + std::to_string(pe.dim()));
}

}  // namespace

Matrix add_positions(const Matrix& c, const PositionTable& pe) {
    check_positions(c.rows(), c.cols(), pe);
    return c + pe.table().value().topRows(c.rows());
}

ag::Var add_positions(const ag::Var& c, const PositionTable& pe) {
    check_positions(c.rows(), c.cols(), pe);
    return ag::add(c, ag::slice_rows(pe.table(), 0, c.rows()));
}

namespace {
constexpr char kFeatMagic[9] = "LOVAFEAT";
constexpr std::uint32_t kFeatVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_feature_file(const std::filesystem::path& path, const Matrix& features) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(kFeatMagic, 8);
    put_u32(f, kFeatVersion);
    put_u32(f, static_cast<std::uint32_t>(features.rows()));
    put_u32(f, static_cast<std::uint32_t>(features.cols()));
    f.put(static_cast<char>(kDtypeF32));
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        for (Eigen::Index j = 0; j < features.cols(); ++j) {
            const float v = static_cast<float>(features(i, j));
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(f, bits);
        }
    if (!f) throw IoError("write failed: " + path.string());
}

Matrix read_feature_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kFeatMagic, 8) != 0) throw IoError("bad feature-file magic: " + path.string());
    const std::uint32_t version = get_u32(f);
    if (version != kFeatVersion) throw IoError("unsupported feature-file version: " + path.string());
    const std::uint32_t n = get_u32(f);
    const std::uint32_t d = get_u32(f);
    const int dtype = f.get();
    if (!f || dtype != kDtypeF32) throw IoError("unsupported feature dtype in " + path.string());
    Matrix m(n, d);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < d; ++j) {
            const std::uint32_t bits = get_u32(f);
            float v;
            std::memcpy(&v, &bits, 4);
            m(i, j) = v;
        }
    if (!f) throw IoError("truncated feature file: " + path.string());
    return m;
}

}  // namespace lova
