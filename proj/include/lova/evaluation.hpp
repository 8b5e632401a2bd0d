// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Long-form metrics: overlapping-window clips, FAD over per-audio averaged
// embeddings, IS and MKL over per-audio class posteriors, and a splice
// discontinuity score on log-mel frames.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/checkpoint.hpp"
#include "lova/dsp.hpp"
#include "lova/wav.hpp"

namespace lova {

constexpr double kProbabilityFloor = 1e-10;
constexpr double kCovarianceRegularizer = 1e-6;
constexpr int kEvalRate = 16000;

struct ClipSet {
    std::string source_id;
    std::vector<Waveform> clips;
    std::vector<Eigen::Index> starts;  // in samples
    double window_seconds = 10.0;
    double hop_seconds = 5.0;
    /// Input was shorter than one window and was zero-padded.
    bool padded = false;
};

/// Windows at 0, hop, 2 hop, ... while they fit, plus a final window ending
/// at the audio's end when the grid leaves an uncovered tail.
ClipSet segment_clips(const Waveform& audio, double window_seconds = 10.0, double hop_seconds = 5.0);

/// Fréchet distance between Gaussians fitted to the rows of two sets.
double fad(const Matrix& gen, const Matrix& ref, double regularizer = kCovarianceRegularizer);

/// probabilities: [audios, K]. Floors at 1e-10 and renormalizes each row.
double inception_score(const Matrix& probabilities);

/// Mean over pairs of KL(ref || gen).
double mkl(const Matrix& gen, const Matrix& ref);

/// KL(p || q) of two floored, renormalized distributions.
double kl_divergence(const RowVector& p, const RowVector& q);

struct Discontinuity {
    double score = 0.0;
    int used = 0;
    int skipped = 0;
};

/// Mean over boundaries of the log-mel distance between the frames just left
/// and right of each boundary, minus the median distance between frames the
/// same number of hops apart elsewhere in the signal; never negative.
/// Boundaries are sample indices at the audio's own rate.
Discontinuity boundary_discontinuity_detail(const Waveform& audio, const std::vector<Eigen::Index>& boundaries,
                                            const MelConfig& mel = {});
double boundary_discontinuity(const Waveform& audio, const std::vector<Eigen::Index>& boundaries,
                              const MelConfig& mel = {});

class AudioEmbedder {
public:
    virtual ~AudioEmbedder() = default;
    virtual Eigen::Index dim() const = 0;
    virtual RowVector embed(const Waveform& clip) const = 0;
};

/// Fixed random projection of per-band log-mel mean and standard deviation.
class MelStatsEmbedder final : public AudioEmbedder {
public:
    explicit MelStatsEmbedder(Eigen::Index dim = 16, std::uint64_t seed = 7);
    Eigen::Index dim() const override { return projection_.cols(); }
    RowVector embed(const Waveform& clip) const override;

private:
    Matrix projection_;
};

class AudioClassifier {
public:
    virtual ~AudioClassifier() = default;
    virtual int num_classes() const = 0;
    virtual RowVector logits(const Waveform& clip) const = 0;
};

/// Softmax regression on standardized per-band log-mel mean and spread.
class MelClassifier final : public AudioClassifier {
public:
    static MelClassifier train(const std::vector<Waveform>& clips, const std::vector<int>& labels, int classes,
                               int iterations = 500);
    int num_classes() const override { return static_cast<int>(weight_.cols()); }
    RowVector logits(const Waveform& clip) const override;
    int predict(const Waveform& clip) const;

    void save(TensorContainer& out) const;
    static MelClassifier load(const TensorContainer& in);

private:
    RowVector mean_, scale_;
    Matrix weight_;
    RowVector bias_;
};

/// Features shared by the embedder and classifier: [2 * bands] (mean, std).
RowVector mel_statistics(const Waveform& clip);

/// Per-audio embedding: mean of clip embeddings.
RowVector embed_long_form(const ClipSet& clips, const AudioEmbedder& embedder);
/// Per-audio class posterior: softmax of the mean clip logits.
RowVector classify_long_form(const ClipSet& clips, const AudioClassifier& classifier);

/// Ordered key-value report. Doubles are printed with 17 significant digits
/// so reruns compare byte-for-byte.
class MetricReport {
public:
    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, double value);
    void add(const std::string& key, std::int64_t value);
    std::string text() const;
    void save(const std::filesystem::path& path) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double v);

}  // namespace lova
