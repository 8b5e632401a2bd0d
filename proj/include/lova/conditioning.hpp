// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Video condition: per-frame features stacked into an [N, h_C] matrix, plus
// the learnable position tables added to conditions and latent tokens.

#include <filesystem>
#include <memory>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/params.hpp"
#include "lova/rng.hpp"

namespace lova {

constexpr double kDefaultFps = 8.0;

/// One video frame. Synthetic frames carry their rendered feature vector as
/// payload; frames backed by a cached-feature file carry nothing.
struct Frame {
    double timestamp = 0.0;
    std::vector<double> payload;
};

struct FrameSequence {
    std::vector<Frame> frames;
    double fps = kDefaultFps;

    std::size_t size() const { return frames.size(); }
};

/// N = round(duration * fps), at least 1.
Eigen::Index frame_count(double duration_seconds, double fps);

/// Center-of-interval sampling time of frame k.
inline double frame_timestamp(Eigen::Index k, double fps) { return (static_cast<double>(k) + 0.5) / fps; }

class FrameEmbedder {
public:
    virtual ~FrameEmbedder() = default;
    virtual Eigen::Index dim() const = 0;
    /// Feature row for the frame at position `index` of its sequence.
    virtual RowVector embed(const Frame& frame, std::size_t index) const = 0;
};

/// Returns the feature row the synthetic generator rendered into the frame.
class SyntheticFrameEmbedder final : public FrameEmbedder {
public:
    explicit SyntheticFrameEmbedder(Eigen::Index dim) : dim_(dim) {}
    Eigen::Index dim() const override { return dim_; }
    RowVector embed(const Frame& frame, std::size_t index) const override;

private:
    Eigen::Index dim_;
};

/// Serves rows of a cached-feature file (features produced offline by an
/// image-embedding backbone) by frame index.
class CachedFeatureEmbedder final : public FrameEmbedder {
public:
    explicit CachedFeatureEmbedder(Matrix features) : features_(std::move(features)) {}
    static CachedFeatureEmbedder from_file(const std::filesystem::path& path);

    Eigen::Index dim() const override { return features_.cols(); }
    RowVector embed(const Frame& frame, std::size_t index) const override;
    const Matrix& features() const { return features_; }

private:
    Matrix features_;
};

/// Row i is extractor(frame i). Extraction failures name the frame index.
Matrix extract_features(const FrameSequence& frames, const FrameEmbedder& extractor);

/// Learnable [max_len, dim] table, initialised from N(0, 0.02^2).
class PositionTable {
public:
    PositionTable() = default;
    static PositionTable create(ParamStore& store, const std::string& name, Eigen::Index max_len,
                                Eigen::Index dim, Rng& rng);

    Eigen::Index max_len() const { return table_.rows(); }
    Eigen::Index dim() const { return table_.cols(); }
    const ag::Var& table() const { return table_; }

private:
    ag::Var table_;
};

/// Row i becomes c_i + table[i].
Matrix add_positions(const Matrix& c, const PositionTable& pe);
ag::Var add_positions(const ag::Var& c, const PositionTable& pe);

/// Cached-feature file:
///   "LOVAFEAT" | version u32 | N u32 | h_C u32 | dtype u8 (1 = f32) | f32 row-major data
/// All little-endian.
void write_feature_file(const std::filesystem::path& path, const Matrix& features);
Matrix read_feature_file(const std::filesystem::path& path);

}  // namespace lova
