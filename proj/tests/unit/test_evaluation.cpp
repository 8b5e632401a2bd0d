// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "../oracles/fad_sets.hpp"

#include "lova/errors.hpp"
#include "lova/evaluation.hpp"
#include "lova/rng.hpp"

using namespace lova;
using Catch::Approx;

namespace {

Waveform tone(double seconds, double hz, int rate, double gain = 0.5) {
    Waveform w;
    w.rate = rate;
    const auto n = static_cast<Eigen::Index>(std::llround(seconds * rate));
    w.samples.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) w.samples(i, 0) = gain * std::sin(2 * M_PI * hz * i / rate);
    return w;
}

Waveform concat(const Waveform& a, const Waveform& b) {
    Waveform w;
    w.rate = a.rate;
    w.samples.resize(a.num_samples() + b.num_samples(), 1);
    w.samples << a.samples, b.samples;
    return w;
}

Matrix fixed(const double (&rows)[oracle::kFadRows][oracle::kFadCols]) {
    Matrix m(oracle::kFadRows, oracle::kFadCols);
    for (int i = 0; i < oracle::kFadRows; ++i)
        for (int j = 0; j < oracle::kFadCols; ++j) m(i, j) = rows[i][j];
    return m;
}

RowVector probs(std::initializer_list<double> v) {
    RowVector r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
}

}  // namespace

TEST_CASE("window counts for the stated policy") {
    CHECK(segment_clips(tone(10.0, 440, 16000)).clips.size() == 1);
    const ClipSet twenty = segment_clips(tone(20.0, 440, 16000));
    CHECK(twenty.starts == std::vector<Eigen::Index>{0, 80000, 160000});

    const ClipSet odd = segment_clips(tone(42.1, 440, 16000));
    REQUIRE(odd.clips.size() == 8);
    CHECK(odd.starts.back() == 673600 - 160000);
    CHECK(odd.starts[6] == 30 * 16000);
    for (const auto& c : odd.clips) CHECK(c.num_samples() == 160000);
    CHECK(!odd.padded);
}

TEST_CASE("windows cover every sample and short audio pads") {
    for (double d : {10.0, 13.7, 25.0, 31.25, 60.0}) {
        const Waveform w = tone(d, 300, 8000);
        const ClipSet set = segment_clips(w);
        std::vector<bool> covered(static_cast<std::size_t>(w.num_samples()), false);
        for (Eigen::Index s : set.starts)
            for (Eigen::Index i = s; i < s + 80000; ++i) covered[static_cast<std::size_t>(i)] = true;
        INFO("duration " << d);
        CHECK(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }));
        CHECK(set.clips.front().samples == w.samples.topRows(80000));
    }
    const ClipSet shortset = segment_clips(tone(3.0, 300, 8000));
    CHECK(shortset.padded);
    REQUIRE(shortset.clips.size() == 1);
    CHECK(shortset.clips[0].num_samples() == 80000);
    CHECK(shortset.clips[0].samples.bottomRows(56000).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(segment_clips(tone(3.0, 300, 8000), 0.0, 5.0), InvalidArgument);
    CHECK_THROWS_AS(segment_clips(tone(3.0, 300, 8000), 10.0, -1.0), InvalidArgument);
}

TEST_CASE("FAD matches the eigendecomposition oracle") {
    const Matrix g = fixed(oracle::kFadGen), r = fixed(oracle::kFadRef);
    CHECK(fad(g, r) == Approx(oracle::kFadValue).margin(1e-8));
    CHECK(fad(r, g) == Approx(oracle::kFadValue).margin(1e-8));
    CHECK(std::abs(fad(g, g)) < 1e-8);
}

TEST_CASE("FAD of shifted Gaussians is the squared mean shift") {
    Rng rng(5);
    const int n = 50000;
    Matrix a(n, 4), b(n, 4);
    rng.fill_normal(a);
    rng.fill_normal(b);
    RowVector mu(4);
    mu << 1.0, -0.5, 0.75, 2.0;
    b.rowwise() += mu;
    CHECK(fad(a, b) == Approx(mu.squaredNorm()).epsilon(0.02));
}

TEST_CASE("FAD input checks") {
    CHECK_THROWS_AS(fad(Matrix::Zero(1, 3), Matrix::Zero(5, 3)), InvalidArgument);
    Matrix bad = Matrix::Zero(5, 3);
    bad(2, 1) = std::nan("");
    CHECK_THROWS_AS(fad(bad, Matrix::Zero(5, 3)), InvalidArgument);
    CHECK_THROWS_AS(fad(Matrix::Zero(5, 3), Matrix::Zero(5, 4)), InvalidArgument);
    // Rank-deficient sets still give a finite value through the regularizer.
    CHECK(std::isfinite(fad(Matrix::Ones(5, 6), Matrix::Zero(5, 6))));
}

TEST_CASE("inception score bounds and closed forms") {
    const int k = 8;
    CHECK(inception_score(Matrix::Constant(5, k, 1.0 / k)) == Approx(1.0).margin(1e-12));
    CHECK(inception_score(Matrix::Identity(k, k)) == Approx(7.999999865455234).epsilon(1e-12));
    CHECK(inception_score(probs({0.1, 0.7, 0.2})) == Approx(1.0).margin(1e-12));

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix p(6, k);
        for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = std::exp(3.0 * rng.normal());
        for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
        const double is = inception_score(p);
        CHECK(is >= 1.0 - 1e-12);
        CHECK(is <= k + 1e-9);
    }
}

TEST_CASE("KL and MKL") {
    const RowVector p = probs({0.5, 0.5}), q = probs({0.9, 0.1});
    CHECK(kl_divergence(p, q) == Approx(0.5108256237659907).margin(1e-4));
    CHECK(kl_divergence(q, p) == Approx(0.3680642071684971).margin(1e-4));
    CHECK(kl_divergence(p, q) != Approx(kl_divergence(q, p)));
    CHECK(kl_divergence(p, p) == 0.0);

    Matrix gen(2, 2), ref(2, 2);
    gen << 0.9, 0.1, 0.3, 0.7;
    ref << 0.5, 0.5, 0.3, 0.7;
    // mkl averages KL(ref || gen) over pairs.
    CHECK(mkl(gen, ref) == Approx(0.5 * 0.5108256237659907).margin(1e-10));
    CHECK(mkl(gen, gen) == 0.0);
    CHECK(mkl(gen, ref) >= 0.0);
    CHECK_THROWS_AS(mkl(gen, Matrix::Constant(3, 2, 0.5)), InvalidArgument);
}

TEST_CASE("discontinuity separates splices from steady tones") {
    const Waveform steady = tone(4.0, 440, 16000);
    const std::vector<Eigen::Index> cut = {32000};
    const double steady_score = boundary_discontinuity(steady, cut);
    const Waveform spliced = concat(tone(2.0, 440, 16000), tone(2.0, 880, 16000));
    const double splice_score = boundary_discontinuity(spliced, cut);
    INFO("steady " << steady_score << " spliced " << splice_score);
    // Frame-noise floor of the steady tone: the largest excess of a frame-pair
    // distance over the median for the same gap.
    const Matrix spec = log_mel(mono(steady), MelConfig{});
    double noise_floor = 0.0;
    for (Eigen::Index gap = 1; gap <= 4; ++gap) {
        std::vector<double> d;
        for (Eigen::Index i = 0; i + gap < spec.rows(); ++i) d.push_back((spec.row(i + gap) - spec.row(i)).norm());
        std::sort(d.begin(), d.end());
        noise_floor = std::max(noise_floor, d.back() - d[d.size() / 2]);
    }
    INFO("noise floor " << noise_floor);
    CHECK(steady_score >= 0.0);
    CHECK(steady_score <= noise_floor);
    CHECK(splice_score > 0.0);
    CHECK(splice_score >= 10.0 * steady_score);
    CHECK(boundary_discontinuity(spliced, {}) == 0.0);

    const Discontinuity edge = boundary_discontinuity_detail(steady, {10, 32000});
    CHECK(edge.used == 1);
    CHECK(edge.skipped == 1);

    // Boundaries are given at the audio's own rate.
    const Waveform spliced8k = concat(tone(2.0, 440, 8000), tone(2.0, 880, 8000));
    CHECK(boundary_discontinuity(spliced8k, {16000}) > 10.0 * boundary_discontinuity(tone(4.0, 440, 8000), {16000}));
}

TEST_CASE("resampling") {
    const Waveform a = tone(1.0, 1000, 16000);
    CHECK(resample(a, 16000).samples == a.samples);

    const Waveform b = resample(tone(10.0, 1000, 44100), 16000);
    CHECK(b.rate == 16000);
    CHECK(b.num_samples() == 160000);
    // Amplitude away from the edges.
    const double peak = b.samples.middleRows(8000, 144000).cwiseAbs().maxCoeff();
    CHECK(peak == Approx(0.5).epsilon(0.01));

    const Waveform c = resample(tone(2.5, 300, 8000), 44100);
    CHECK(std::abs(c.num_samples() - 110250) <= 1);
}

TEST_CASE("long-form pooling and classifier") {
    const int rate = 8000;
    std::vector<Waveform> clips;
    std::vector<int> labels;
    const double carriers[3] = {200.0, 500.0, 1200.0};
    for (int i = 0; i < 30; ++i) {
        clips.push_back(tone(2.0, carriers[i % 3] * (1.0 + 0.01 * (i / 3)), rate, 0.2 + 0.02 * i));
        labels.push_back(i % 3);
    }
    const MelClassifier clf = MelClassifier::train(clips, labels, 3, 300);
    CHECK(clf.num_classes() == 3);
    int right = 0;
    for (int i = 0; i < 30; ++i) right += clf.predict(clips[static_cast<std::size_t>(i)]) == labels[static_cast<std::size_t>(i)];
    CHECK(right == 30);
    CHECK(clf.predict(tone(2.0, 505.0, rate, 0.33)) == 1);

    TensorContainer tc;
    clf.save(tc);
    const MelClassifier back = MelClassifier::load(TensorContainer::deserialize(tc.serialize()));
    CHECK(back.logits(clips[4]) == clf.logits(clips[4]));

    const ClipSet set = segment_clips(tone(25.0, 500.0, rate, 0.3));
    const RowVector post = classify_long_form(set, clf);
    CHECK(post.sum() == Approx(1.0).margin(1e-6));
    CHECK(post.minCoeff() >= 0.0);
    CHECK(post(1) > 0.9);

    const MelStatsEmbedder emb(16, 7);
    CHECK(emb.dim() == 16);
    RowVector mean = RowVector::Zero(16);
    for (const auto& c : set.clips) mean += emb.embed(c);
    mean /= static_cast<double>(set.clips.size());
    CHECK((embed_long_form(set, emb) - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(emb.embed(clips[0]) == MelStatsEmbedder(16, 7).embed(clips[0]));
}

TEST_CASE("metric reports print exact doubles") {
    MetricReport r;
    r.add("fad", 0.1);
    r.add("clips", std::int64_t{8});
    r.add("mode", "split");
    CHECK(r.text() == "fad: 0.10000000000000001\nclips: 8\nmode: split\n");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
