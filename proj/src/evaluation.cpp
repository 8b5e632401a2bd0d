// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/evaluation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "lova/errors.hpp"
#include "lova/layers.hpp"
#include "lova/rng.hpp"

namespace lova {

ClipSet segment_clips(const Waveform& audio, double window_seconds, double hop_seconds) {
    if (!(window_seconds > 0.0) || !(hop_seconds > 0.0))
        throw InvalidArgument("segment_clips: window and hop must be positive");
    ClipSet set;
    set.window_seconds = window_seconds;
    set.hop_seconds = hop_seconds;
    const Eigen::Index total = audio.num_samples();
    const auto window = static_cast<Eigen::Index>(std::llround(window_seconds * audio.rate));
    const auto hop = static_cast<Eigen::Index>(std::llround(hop_seconds * audio.rate));
    if (window < 1 || hop < 1) throw InvalidArgument("segment_clips: window and hop must span at least one sample");

    if (total < window) {
        Waveform clip{Matrix::Zero(window, audio.channels()), audio.rate};
        clip.samples.topRows(total) = audio.samples;
        set.clips.push_back(std::move(clip));
        set.starts.push_back(0);
        set.padded = true;
        return set;
    }
    for (Eigen::Index s = 0; s + window <= total; s += hop) set.starts.push_back(s);
    if (set.starts.back() + window < total) set.starts.push_back(total - window);
    for (Eigen::Index s : set.starts) set.clips.push_back({audio.samples.middleRows(s, window), audio.rate});
    return set;
}

namespace {

void check_set(const Matrix& m, const char* what) {
    if (m.rows() < 2) throw InvalidArgument(std::string("fad: ") + what + " set needs at least 2 rows");
    if (!m.allFinite()) throw InvalidArgument(std::string("fad: ") + what + " set has non-finite embeddings");
}

Matrix covariance(const Matrix& x, const RowVector& mu) {
    const Matrix centered = x.rowwise() - mu;
    return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

RowVector floored(const RowVector& p) {
    RowVector q = p.cwiseMax(kProbabilityFloor);
    return q / q.sum();
}

}  // namespace

double fad(const Matrix& gen, const Matrix& ref, double regularizer) {
    check_set(gen, "generated");
    check_set(ref, "reference");
    if (gen.cols() != ref.cols()) throw InvalidArgument("fad: embedding dims differ");
    const Eigen::Index d = gen.cols();
    const RowVector mu_g = gen.colwise().mean(), mu_r = ref.colwise().mean();
    const Matrix reg = regularizer * Matrix::Identity(d, d);
    const Matrix cov_g = covariance(gen, mu_g) + reg;
    const Matrix cov_r = covariance(ref, mu_r) + reg;

    // Tr((Σg Σr)^{1/2}) = Tr((Σr^{1/2} Σg Σr^{1/2})^{1/2}), a symmetric PSD form.
    Eigen::SelfAdjointEigenSolver<Matrix> er(cov_r);
    const Matrix root_r =
        er.eigenvectors() * er.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * er.eigenvectors().transpose();
    Matrix inner = root_r * cov_g * root_r;
    inner = 0.5 * (inner + inner.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> ei(inner, Eigen::EigenvaluesOnly);
    const double trace_root = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    const double value = (mu_g - mu_r).squaredNorm() + cov_g.trace() + cov_r.trace() - 2.0 * trace_root;
    return std::max(0.0, value);
}

double kl_divergence(const RowVector& p, const RowVector& q) {
    if (p.size() != q.size()) throw InvalidArgument("kl_divergence: distributions differ in size");
    const RowVector a = floored(p), b = floored(q);
    return (a.array() * (a.array() / b.array()).log()).sum();
}

double inception_score(const Matrix& probabilities) {
    if (probabilities.rows() < 1) throw InvalidArgument("inception_score: need at least one audio");
    if (probabilities.cols() < 2) throw InvalidArgument("inception_score: need at least two classes");
    Matrix p(probabilities.rows(), probabilities.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) = floored(probabilities.row(i));
    const RowVector marginal = p.colwise().mean();
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        total += (p.row(i).array() * (p.row(i).array() / marginal.array()).log()).sum();
    return std::exp(total / static_cast<double>(p.rows()));
}

double mkl(const Matrix& gen, const Matrix& ref) {
    if (gen.rows() != ref.rows() || gen.cols() != ref.cols() || gen.rows() == 0)
        throw InvalidArgument("mkl: generated and reference sets are not paired");
    double total = 0.0;
    for (Eigen::Index i = 0; i < gen.rows(); ++i) total += kl_divergence(ref.row(i), gen.row(i));
    return total / static_cast<double>(gen.rows());
}

Discontinuity boundary_discontinuity_detail(const Waveform& audio, const std::vector<Eigen::Index>& boundaries,
                                            const MelConfig& mel) {
    Discontinuity out;
    if (boundaries.empty()) return out;
    const Waveform at_rate = resample(audio, mel.rate);
    const Matrix spec = log_mel(mono(at_rate), mel);
    const Eigen::Index frames = spec.rows();
    const Eigen::Index win = mel.frame_length(), hop = mel.hop_length();

    std::vector<Eigen::Index> cuts;
    for (Eigen::Index b : boundaries)
        cuts.push_back(static_cast<Eigen::Index>(
            std::llround(static_cast<double>(b) * mel.rate / static_cast<double>(audio.rate))));

    auto straddles = [&](Eigen::Index first, Eigen::Index last) {
        const Eigen::Index lo = first * hop, hi = last * hop + win;
        for (Eigen::Index c : cuts)
            if (c > lo && c < hi) return true;
        return false;
    };

    std::map<Eigen::Index, double> baseline;
    auto baseline_for = [&](Eigen::Index gap) {
        auto it = baseline.find(gap);
        if (it != baseline.end()) return it->second;
        std::vector<double> d;
        for (Eigen::Index i = 0; i + gap < frames; ++i)
            if (!straddles(i, i + gap)) d.push_back((spec.row(i + gap) - spec.row(i)).norm());
        double med = 0.0;
        if (!d.empty()) {
            const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
            std::nth_element(d.begin(), mid, d.end());
            med = *mid;
            if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
        }
        baseline[gap] = med;
        return med;
    };

    double total = 0.0;
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        const Eigen::Index c = cuts[k];
        const Eigen::Index left = c >= win ? (c - win) / hop : -1;
        const Eigen::Index right = (c + hop - 1) / hop;
        if (left < 0 || right >= frames) {
            std::cerr << "warning: boundary at sample " << boundaries[k] << " is within one frame of the edge; skipped\n";
            ++out.skipped;
            continue;
        }
        total += (spec.row(right) - spec.row(left)).norm() - baseline_for(right - left);
        ++out.used;
    }
    if (out.used > 0) out.score = std::max(0.0, total / out.used);
    return out;
}

double boundary_discontinuity(const Waveform& audio, const std::vector<Eigen::Index>& boundaries,
                              const MelConfig& mel) {
    return boundary_discontinuity_detail(audio, boundaries, mel).score;
}

RowVector mel_statistics(const Waveform& clip) {
    const MelConfig mel;
    const Matrix spec = log_mel(mono(resample(clip, mel.rate)), mel);
    const RowVector mu = spec.colwise().mean();
    const RowVector sd = ((spec.rowwise() - mu).array().square().colwise().mean()).sqrt();
    RowVector out(2 * mel.bands);
    out << mu, sd;
    return out;
}

MelStatsEmbedder::MelStatsEmbedder(Eigen::Index dim, std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::Index in = 2 * MelConfig{}.bands;
    projection_ = normal_matrix(in, dim, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

RowVector MelStatsEmbedder::embed(const Waveform& clip) const { return mel_statistics(clip) * projection_; }

namespace {

RowVector softmax(const RowVector& z) {
    const RowVector e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

}  // namespace

MelClassifier MelClassifier::train(const std::vector<Waveform>& clips, const std::vector<int>& labels, int classes,
                                   int iterations) {
    if (clips.empty() || clips.size() != labels.size()) throw InvalidArgument("classifier: clips and labels differ");
    if (classes < 2) throw InvalidArgument("classifier: need at least two classes");
    Matrix x(static_cast<Eigen::Index>(clips.size()), 2 * MelConfig{}.bands);
    for (std::size_t i = 0; i < clips.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = mel_statistics(clips[i]);

    MelClassifier c;
    c.mean_ = x.colwise().mean();
    c.scale_ = ((x.rowwise() - c.mean_).array().square().colwise().mean()).sqrt().cwiseMax(1e-6).inverse();
    const Matrix xs = (x.rowwise() - c.mean_).array().rowwise() * c.scale_.array();

    Matrix y = Matrix::Zero(x.rows(), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) throw InvalidArgument("classifier: label out of range");
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    c.weight_ = Matrix::Zero(x.cols(), classes);
    c.bias_ = RowVector::Zero(classes);
    constexpr double lr = 0.5, l2 = 1e-4;
    const double n = static_cast<double>(x.rows());
    for (int it = 0; it < iterations; ++it) {
        Matrix p = (xs * c.weight_).rowwise() + c.bias_;
        for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) = softmax(p.row(i));
        const Matrix g = (p - y) / n;
        c.weight_ -= lr * (xs.transpose() * g + l2 * c.weight_);
        c.bias_ -= lr * g.colwise().sum();
    }
    return c;
}

RowVector MelClassifier::logits(const Waveform& clip) const {
    const RowVector x = (mel_statistics(clip) - mean_).cwiseProduct(scale_);
    return x * weight_ + bias_;
}

int MelClassifier::predict(const Waveform& clip) const {
    Eigen::Index best;
    logits(clip).maxCoeff(&best);
    return static_cast<int>(best);
}

void MelClassifier::save(TensorContainer& out) const {
    out.put("classifier.mean", mean_);
    out.put("classifier.scale", scale_);
    out.put("classifier.weight", weight_);
    out.put("classifier.bias", bias_);
}

MelClassifier MelClassifier::load(const TensorContainer& in) {
    MelClassifier c;
    c.mean_ = in.get_matrix("classifier.mean");
    c.scale_ = in.get_matrix("classifier.scale");
    c.weight_ = in.get_matrix("classifier.weight");
    c.bias_ = in.get_matrix("classifier.bias");
    return c;
}

RowVector embed_long_form(const ClipSet& clips, const AudioEmbedder& embedder) {
    RowVector acc = RowVector::Zero(embedder.dim());
    for (const auto& clip : clips.clips) acc += embedder.embed(clip);
    return acc / static_cast<double>(clips.clips.size());
}

RowVector classify_long_form(const ClipSet& clips, const AudioClassifier& classifier) {
    RowVector acc = RowVector::Zero(classifier.num_classes());
    for (const auto& clip : clips.clips) acc += classifier.logits(clip);
    return softmax(acc / static_cast<double>(clips.clips.size()));
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void MetricReport::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
void MetricReport::add(const std::string& key, double value) { add(key, format_double(value)); }
void MetricReport::add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }

std::string MetricReport::text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + ": " + v + "\n";
    return out;
}

void MetricReport::save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write report: " + path.string());
    f << text();
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace lova
