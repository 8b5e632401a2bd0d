// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "catch_amalgamated.hpp"

#include <cmath>

#include "lova/audio_vae.hpp"
#include "lova/errors.hpp"
#include "lova/rng.hpp"

using namespace lova;
using Catch::Approx;

namespace {

VaeConfig tiny_config() {
    VaeConfig c;
    c.strides = {4, 2};
    c.latent_dim = 4;
    c.hidden = 8;
    return c;
}

Waveform tone(Eigen::Index n, double hz, int rate, double gain = 0.5) {
    Waveform w;
    w.rate = rate;
    w.samples.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) w.samples(i, 0) = gain * std::sin(2 * M_PI * hz * i / rate);
    return w;
}

}  // namespace

TEST_CASE("latent length is the ceiling of samples over ratio") {
    CHECK(latent_length(80000, 320) == 250);
    CHECK(latent_length(1, 320) == 1);
    CHECK(latent_length(320, 320) == 1);
    CHECK(latent_length(321, 320) == 2);
    CHECK(VaeConfig{}.compression_ratio() == 320);
    CHECK(tiny_config().compression_ratio() == 8);
}

TEST_CASE("encode shapes at the default ratio") {
    AudioVae vae(VaeConfig{}, 1);
    const VaePosterior p = vae.encode(tone(80000, 440, 8000));
    CHECK(p.mean.rows() == 250);
    CHECK(p.mean.cols() == 32);
    CHECK(p.log_variance.rows() == 250);

    Waveform one;
    one.rate = 8000;
    one.samples = Matrix::Constant(1, 1, 0.3);
    CHECK(vae.encode(one).mean.rows() == 1);

    Waveform silent;
    silent.rate = 8000;
    silent.samples = Matrix::Zero(4000, 1);
    const VaePosterior z = vae.encode(silent);
    CHECK(z.mean.allFinite());
    CHECK(z.log_variance.allFinite());
}

TEST_CASE("encode is deterministic and checks channels") {
    AudioVae vae(tiny_config(), 3);
    const Waveform w = tone(100, 300, 8000);
    const VaePosterior a = vae.encode(w), b = vae.encode(w);
    CHECK(a.mean == b.mean);
    CHECK(a.log_variance == b.log_variance);
    CHECK(a.log_variance.maxCoeff() <= kLogVarMax);
    CHECK(a.log_variance.minCoeff() >= kLogVarMin);

    Waveform stereo = w;
    stereo.samples = Matrix::Zero(100, 2);
    CHECK_THROWS_AS(vae.encode(stereo), InvalidArgument);
}

TEST_CASE("stereo channels fold into the feature axis") {
    VaeConfig c = tiny_config();
    c.channels = 2;
    AudioVae vae(c, 3);
    Waveform w;
    w.rate = 8000;
    w.samples.resize(64, 2);
    w.samples.col(0) = tone(64, 200, 8000).samples.col(0);
    w.samples.col(1) = tone(64, 900, 8000).samples.col(0);
    const VaePosterior p = vae.encode(w);
    CHECK(p.mean.rows() == 8);
    CHECK(p.mean.cols() == 8);
    const Waveform out = vae.decode(p.mean, 8000);
    CHECK(out.channels() == 2);
    CHECK(out.num_samples() == 64);
}

TEST_CASE("sampling at the log-variance floor returns the mean") {
    // The floor leaves a standard deviation of exp(-15), about 3.1e-7, so a
    // 1e-6 tolerance covers draws within 3.27 standard deviations.
    VaePosterior p;
    p.mean = Matrix::Constant(100, 10, 0.7);
    p.log_variance = Matrix::Constant(100, 10, kLogVarMin);
    const Matrix dev = vae_sample(p, 9) - p.mean;
    Rng rng(9);
    Matrix n(100, 10);
    rng.fill_normal(n);
    CHECK((dev - std::exp(kLogVarMin / 2) * n).cwiseAbs().maxCoeff() < 1e-15);
    const auto within = (dev.array().abs() < 1e-6).count();
    CHECK(within >= 995);
}

TEST_CASE("sampling is reproducible from a seed") {
    VaePosterior p;
    p.mean = Matrix::Zero(4, 4);
    p.log_variance = Matrix::Zero(4, 4);
    CHECK(vae_sample(p, 5) == vae_sample(p, 5));
    CHECK(vae_sample(p, 5) != vae_sample(p, 6));
}

TEST_CASE("sample variance matches the posterior variance") {
    VaePosterior p;
    p.mean.resize(1, 3);
    p.log_variance.resize(1, 3);
    p.mean << 0.2, -1.0, 3.0;
    p.log_variance << -1.0, 0.0, 1.5;
    const int n = 10000;
    Matrix draws(n, 3);
    Rng rng(17);
    for (int i = 0; i < n; ++i) draws.row(i) = vae_sample(p, rng);
    for (int j = 0; j < 3; ++j) {
        const double mean = draws.col(j).mean();
        const double var = (draws.col(j).array() - mean).square().sum() / (n - 1);
        const double expected = std::exp(p.log_variance(0, j));
        INFO("coordinate " << j << " var=" << var << " expected=" << expected);
        CHECK(std::abs(var - expected) < 3 * expected * std::sqrt(2.0 / (n - 1)));
        CHECK(std::abs(mean - p.mean(0, j)) < 3 * std::sqrt(expected / n) + 1e-12);
    }
}

TEST_CASE("decode length and range") {
    AudioVae vae(VaeConfig{}, 2);
    const Waveform out = vae.decode(Matrix::Zero(250, 32), 8000);
    CHECK(out.num_samples() == 80000);
    CHECK(out.rate == 8000);
    CHECK(out.samples.allFinite());

    Rng rng(4);
    Matrix big(10, 32);
    rng.fill_normal(big);
    const Waveform loud = vae.decode(big * 1e3, 8000);
    CHECK(loud.samples.cwiseAbs().maxCoeff() <= 1.0);
    CHECK_THROWS_AS(vae.decode(Matrix::Zero(10, 31), 8000), InvalidArgument);
}

TEST_CASE("round-trip length is a whole number of strides") {
    AudioVae vae(tiny_config(), 5);
    for (Eigen::Index n : {1, 7, 8, 9, 63, 100}) {
        const Waveform w = tone(n, 500, 8000);
        const Matrix z = vae_sample(vae.encode(w), 1);
        CHECK(vae.decode(z, 8000).num_samples() == latent_length(n, 8) * 8);
    }
}

TEST_CASE("KL against a standard normal") {
    Matrix mu(1, 3), sig(1, 3);
    mu << 0.5, -1.0, 0.2;
    sig << 0.8, 1.5, 1.0;
    const Matrix logvar = (sig.array().square().log()).matrix();
    // Oracle: sum of 0.5 (mu^2 + sigma^2 - 1 - ln sigma^2).
    CHECK(kl_to_standard_normal(mu, logvar) == Approx(0.9076784432060454).epsilon(1e-12));
    CHECK(kl_to_standard_normal(Matrix::Zero(2, 2), Matrix::Zero(2, 2)) == 0.0);
}

TEST_CASE("zero KL weight leaves pure reconstruction") {
    VaeConfig c = tiny_config();
    c.kl_weight = 0.0;
    AudioVae vae(c, 1);
    Rng rng(3);
    const VaeLoss l = vae.evaluate(tone(64, 250, 8000), rng);
    CHECK(l.total == l.reconstruction);
    CHECK(l.kl > 0.0);

    AudioVae weighted(tiny_config(), 1);
    Rng rng2(3);
    const VaeLoss w = weighted.evaluate(tone(64, 250, 8000), rng2);
    CHECK(w.total == Approx(w.reconstruction + 1e-4 * w.kl).epsilon(1e-12));
}

TEST_CASE("training reduces reconstruction error below its own recorded level") {
    AudioVae vae(tiny_config(), 7);
    AdamWConfig oc;
    oc.lr = 3e-3;
    oc.warmup_steps = 10;
    AdamW opt(oc);
    Rng rng(11);
    std::vector<Waveform> corpus;
    for (double hz : {200.0, 450.0, 700.0, 1100.0}) corpus.push_back(tone(256, hz, 8000));

    auto mean_recon = [&] {
        double acc = 0.0;
        for (const auto& w : corpus) {
            const Waveform out = vae.decode(vae.encode(w).mean, 8000);
            acc += (out.samples - w.samples).array().square().mean();
        }
        return acc / corpus.size();
    };
    const double before = mean_recon();
    double recorded = 0.0;
    const int steps = 600;
    for (int s = 0; s < steps; ++s) {
        const VaeLoss l = vae.train_step(corpus, opt, rng);
        REQUIRE(std::isfinite(l.total));
        if (s >= steps - 50) recorded += l.reconstruction / 50;
    }
    const double after = mean_recon();
    INFO("before " << before << " after " << after << " recorded " << recorded);
    CHECK(after < 0.5 * before);
    CHECK(after <= recorded * 1.1);
}

TEST_CASE("train step rejects an empty batch and reports divergence") {
    AudioVae vae(tiny_config(), 1);
    AdamW opt;
    Rng rng(0);
    CHECK_THROWS_AS(vae.train_step({}, opt, rng), InvalidArgument);
    Waveform bad = tone(16, 100, 8000);
    bad.samples(3, 0) = std::nan("");
    CHECK_THROWS_AS(vae.train_step({bad}, opt, rng), TrainingDiverged);
}

TEST_CASE("checkpoint round-trip keeps weights and scale") {
    AudioVae vae(tiny_config(), 8);
    vae.set_latent_scale(2.5);
    TensorContainer tc;
    vae.save(tc);
    const AudioVae back = AudioVae::load(TensorContainer::deserialize(tc.serialize()));
    CHECK(back.latent_scale() == 2.5);
    CHECK(back.config().strides == tiny_config().strides);
    CHECK(checksum(back.params()) == checksum(vae.params()));
    const Waveform w = tone(40, 300, 8000);
    CHECK(back.encode(w).mean == vae.encode(w).mean);
}

TEST_CASE("encoder and decoder gradients match central differences") {
    VaeConfig c = tiny_config();
    c.hidden = 3;
    c.latent_dim = 2;
    AudioVae vae(c, 21);
    const Matrix x = tone(16, 700, 8000).samples;
    Rng rng(5);
    Matrix noise(2, 2);
    rng.fill_normal(noise);

    auto graph = [&] {
        auto [mean, logvar] = vae.encode_channel(ag::constant(x));
        ag::Var z = ag::add(mean, ag::mul(ag::exp(ag::scale(logvar, 0.5)), ag::constant(noise)));
        return ag::add(ag::mse(vae.decode_channel(z), ag::constant(x)), ag::scale(ag::mean(ag::square(logvar)), 0.1));
    };
    auto value = [&] {
        ag::NoGradGuard guard;
        return graph().item();
    };

    vae.params().zero_grad();
    ag::backward(graph());
    const double h = 1e-6;
    for (const auto& name : vae.params().names()) {
        ag::Var p = vae.params().at(name);
        const Matrix analytic = p.has_grad() ? p.grad() : Matrix::Zero(p.rows(), p.cols());
        Matrix numeric(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.value().size(); ++i) {
            double& v = p.mutable_value().data()[i];
            const double keep = v;
            v = keep + h;
            const double up = value();
            v = keep - h;
            const double down = value();
            v = keep;
            numeric.data()[i] = (up - down) / (2 * h);
        }
        const double scale = std::max(analytic.norm() + numeric.norm(), 1e-10);
        INFO(name << " analytic " << analytic.norm() << " numeric " << numeric.norm());
        CHECK((analytic - numeric).norm() / scale < 1e-4);
    }
}
