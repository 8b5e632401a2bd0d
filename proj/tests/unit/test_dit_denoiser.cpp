// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "catch_amalgamated.hpp"

#include <cmath>
#include <set>

#include "lova/diffusion_core.hpp"
#include "lova/dit.hpp"
#include "lova/errors.hpp"
#include "lova/layers.hpp"
#include "lova/rng.hpp"

using namespace lova;

namespace {

DiTConfig small_config() {
    DiTConfig c;
    c.depth = 2;
    c.heads = 2;
    c.token_dim = 16;
    c.latent_dim = 8;
    c.cond_dim = 5;
    c.max_tokens = 64;
    c.max_cond = 32;
    return c;
}

Matrix random(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double sd = 1.0) {
    Rng rng(seed);
    return normal_matrix(r, c, sd, rng);
}

// Every parameter gets fresh random values so that the zero-initialised head
// does not hide upstream gradients.
void randomize(DiT& model, std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& name : model.params().names()) {
        ag::Var p = model.params().at(name);
        p.mutable_value() = normal_matrix(p.rows(), p.cols(), 0.5, rng);
    }
}

}  // namespace

TEST_CASE("output has the latent shape and drops the time token") {
    DiT model(small_config(), 1);
    randomize(model, 2);
    const Matrix z = random(16, 8, 3);
    const Matrix c = random(6, 5, 4);
    const Matrix out = model.denoise(z, c, 500);
    CHECK(out.rows() == 16);
    CHECK(out.cols() == 8);
}

TEST_CASE("fresh model predicts zero noise") {
    DiT model(small_config(), 1);
    const Matrix out = model.denoise(random(10, 8, 3), random(4, 5, 4), 10);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("denoise is deterministic") {
    DiT a(small_config(), 9), b(small_config(), 9);
    randomize(a, 5);
    randomize(b, 5);
    const Matrix z = random(12, 8, 3), c = random(7, 5, 4);
    CHECK(a.denoise(z, c, 321) == a.denoise(z, c, 321));
    CHECK(a.denoise(z, c, 321) == b.denoise(z, c, 321));
}

TEST_CASE("null row as condition equals the unconditional branch") {
    DiT model(small_config(), 1);
    randomize(model, 2);
    const Matrix z = random(9, 8, 3);
    const Matrix null_row = model.params().at("null_cond.row").value();
    const Matrix via_context = model.denoise_context(z, null_row, 77);
    CHECK(via_context == model.denoise_unconditional(z, 77));
    CHECK(model.denoise_unconditional(z, 77).allFinite());

    DiT fresh(small_config(), 4);
    CHECK(fresh.denoise_unconditional(z, 3).allFinite());
}

TEST_CASE("variable length: any length up to capacity is accepted") {
    DiT model(small_config(), 1);
    randomize(model, 2);
    for (int len : {1, 5, 40, 64}) {
        const Matrix out = model.denoise(random(len, 8, len), random(3, 5, 1), 100);
        CHECK(out.rows() == len);
        CHECK(out.allFinite());
    }
    CHECK_THROWS_AS(model.denoise(random(65, 8, 1), random(3, 5, 1), 100), SequenceTooLong);
    CHECK_THROWS_AS(model.denoise(random(4, 8, 1), random(33, 5, 1), 100), SequenceTooLong);
    CHECK_THROWS_AS(model.denoise(random(4, 7, 1), random(3, 5, 1), 100), InvalidArgument);
}

TEST_CASE("non-finite activations name the block") {
    DiT model(small_config(), 1);
    randomize(model, 2);
    Matrix z = random(4, 8, 1);
    z(0, 0) = std::nan("");
    try {
        model.denoise(z, random(3, 5, 1), 5);
        FAIL("expected NumericFailure");
    } catch (const NumericFailure& e) {
        CHECK(std::string(e.what()).find("block 0") != std::string::npos);
    }
}

TEST_CASE("perturbing one condition row changes the output") {
    DiT model(small_config(), 1);
    randomize(model, 2);
    const Matrix z = random(10, 8, 3);
    Matrix c = random(6, 5, 4);
    const Matrix before = model.denoise(z, c, 250);
    c.row(3) += random(1, 5, 8);
    CHECK((model.denoise(z, c, 250) - before).norm() > 0.0);
}

TEST_CASE("condition rows act as a set once positions are added") {
    DiT model(small_config(), 1);
    randomize(model, 2);
    const Matrix z = random(10, 8, 3);
    const Matrix ctx = add_positions(random(6, 5, 4), model.pe_c());
    Matrix permuted(ctx.rows(), ctx.cols());
    const int order[] = {4, 0, 5, 2, 1, 3};
    for (int i = 0; i < 6; ++i) permuted.row(i) = ctx.row(order[i]);
    const Matrix a = model.denoise_context(z, ctx, 400);
    const Matrix b = model.denoise_context(z, permuted, 400);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("distinct timesteps embed distinctly") {
    DiT model(DiTConfig{}, 0);
    std::vector<Matrix> emb;
    for (int t = 0; t < 1000; t += 7) emb.push_back(model.timestep_embedding(t));
    for (std::size_t i = 0; i < emb.size(); ++i)
        for (std::size_t j = i + 1; j < emb.size(); ++j) REQUIRE((emb[i] - emb[j]).norm() > 1e-9);
}

TEST_CASE("parameter count follows the config") {
    for (DiTConfig c : {DiTConfig{}, small_config()}) {
        DiT model(c, 0);
        CHECK(model.params().count() == parameter_count(c));
    }
    DiTConfig c = small_config();
    c.depth = 3;
    c.mlp_ratio = 2.0;
    DiT model(c, 0);
    CHECK(model.params().count() == parameter_count(c));
    CHECK(model.describe().find("total: " + std::to_string(parameter_count(c))) != std::string::npos);
}

TEST_CASE("every parameter belongs to a known group") {
    DiT model(small_config(), 0);
    std::set<std::string> groups;
    for (const auto& n : model.params().names()) groups.insert(parameter_group(n));
    CHECK(groups == std::set<std::string>{"pe_z", "pe_c", "null_cond", "input", "time_embed", "blocks.0",
                                          "blocks.1", "head"});
    CHECK_THROWS_AS(parameter_group("vae.encoder.weight"), RegistryInconsistency);
}

TEST_CASE("config validation") {
    DiTConfig c = small_config();
    c.heads = 3;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.depth = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("gradients match central differences") {
    DiTConfig c;
    c.depth = 1;
    c.heads = 1;
    c.token_dim = 4;
    c.latent_dim = 4;
    c.cond_dim = 3;
    c.mlp_ratio = 2.0;
    c.max_tokens = 3;
    c.max_cond = 2;
    DiT model(c, 11);
    randomize(model, 12);

    const Matrix z = random(3, 4, 13);
    const Matrix cond = random(2, 3, 14);
    const Matrix eps = random(3, 4, 15);
    const double t = 417;

    auto loss_value = [&] {
        ag::NoGradGuard guard;
        return denoising_loss(model.denoise(z, cond, t), eps);
    };

    model.params().zero_grad();
    ag::Var loss = ag::mse(model.forward(ag::constant(z), model.condition(cond), t), ag::constant(eps));
    REQUIRE(loss.item() == Catch::Approx(loss_value()).epsilon(1e-12));
    ag::backward(loss);

    const double h = 1e-5;
    for (const auto& name : model.params().names()) {
        ag::Var p = model.params().at(name);
        const Matrix analytic = p.has_grad() ? p.grad() : Matrix::Zero(p.rows(), p.cols());
        Matrix numeric(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.value().size(); ++i) {
            double& x = p.mutable_value().data()[i];
            const double keep = x;
            x = keep + h;
            const double up = loss_value();
            x = keep - h;
            const double down = loss_value();
            x = keep;
            numeric.data()[i] = (up - down) / (2 * h);
        }
        const double scale = std::max(analytic.norm() + numeric.norm(), 1e-12);
        INFO(name << " analytic " << analytic.norm() << " numeric " << numeric.norm());
        CHECK((analytic - numeric).norm() / scale < 1e-3);
    }
}
