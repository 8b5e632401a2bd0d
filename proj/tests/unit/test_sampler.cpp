// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "catch_amalgamated.hpp"

#include <cmath>

#include "lova/errors.hpp"
#include "lova/rng.hpp"
#include "lova/sampler.hpp"

using namespace lova;
using Catch::Approx;

namespace {

const NoiseSchedule& cosine() {
    static const NoiseSchedule s = make_schedule(ScheduleKind::cosine, 1000);
    return s;
}

// Exact noise prediction when the data is N(mu, sd^2) in every coordinate.
FunctionNoisePredictor::Fn gaussian_eps(double mu, double sd) {
    return [mu, sd](const Matrix& z, double t) {
        const double ab = cosine().alpha_bar_at(t);
        const double a = std::sqrt(ab), s = std::sqrt(1 - ab);
        return Matrix((s * (z.array() - a * mu) / (ab * sd * sd + 1 - ab)).matrix());
    };
}

struct Moments {
    double mean, sd;
};

Moments moments(const Matrix& x) {
    const double m = x.mean();
    return {m, std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1))};
}

SamplerConfig config(SamplerKind kind, int steps, double guidance = 1.0, std::uint64_t seed = 1) {
    SamplerConfig c;
    c.kind = kind;
    c.steps = steps;
    c.guidance_scale = guidance;
    c.seed = seed;
    return c;
}

class CappedPredictor final : public NoisePredictor {
public:
    Matrix conditional(const Matrix& z, double) const override { return Matrix::Zero(z.rows(), z.cols()); }
    Matrix unconditional(const Matrix& z, double) const override { return Matrix::Zero(z.rows(), z.cols()); }
    Eigen::Index max_length() const override { return 16; }
};

}  // namespace

TEST_CASE("karras sigmas match recomputed values") {
    const std::vector<double> s = karras_sigmas(0.002, 80.0, 5);
    const std::vector<double> expected = {80.0, 17.52783196464411, 2.515218976147159, 0.16975275626876413,
                                          0.002000000000000003, 0.0};
    REQUIRE(s.size() == expected.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == Approx(expected[i]).epsilon(1e-13));
}

TEST_CASE("sigma schedule endpoints and ordering") {
    const NoiseSchedule& sched = cosine();
    const std::vector<double> one = sigma_schedule(sched, 1);
    REQUIRE(one.size() == 2);
    CHECK(one[0] == sched.sigma_max());
    CHECK(one[1] == 0.0);

    const std::vector<double> s = sigma_schedule(sched, 150);
    REQUIRE(s.size() == 151);
    CHECK(s.front() == Approx(sched.sigma_max()));
    CHECK(s[149] == Approx(sched.sigma_min()));
    CHECK(s.back() == 0.0);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] < s[i - 1]);
    CHECK_THROWS_AS(sigma_schedule(sched, 0), InvalidArgument);
}

TEST_CASE("ancestral timesteps stride the schedule") {
    CHECK(ancestral_timesteps(1000, 1) == std::vector<int>{999});
    CHECK(ancestral_timesteps(1000, 4) == std::vector<int>{999, 749, 499, 249});
    CHECK(ancestral_timesteps(10, 50).size() == 10);
    CHECK(ancestral_timesteps(1000, 1000).back() == 0);
}

TEST_CASE("one ancestral step equals the posterior mean by hand") {
    const double mu = 0.4, sd = 0.3;
    FunctionNoisePredictor p(gaussian_eps(mu, sd), gaussian_eps(mu, sd));
    const SamplerConfig c = config(SamplerKind::ddpm_ancestral, 1, 1.0, 77);
    const Matrix out = sample(p, 6, 2, cosine(), c);

    Rng init(derive_seed(77, 0));
    Matrix z(6, 2);
    init.fill_normal(z);
    const double ab = cosine().alpha_bar(999);
    // With alpha_bar_prev = 1 the step returns x0 = (z - sqrt(1 - ab) eps) / sqrt(ab).
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double zi = z.data()[i];
        const double eps = std::sqrt(1 - ab) * (zi - std::sqrt(ab) * mu) / (ab * sd * sd + 1 - ab);
        const double x0 = (zi - std::sqrt(1 - ab) * eps) / std::sqrt(ab);
        CHECK(out.data()[i] == Approx(x0).epsilon(1e-9));
    }
}

TEST_CASE("sampling is reproducible from the seed") {
    FunctionNoisePredictor p(gaussian_eps(0.2, 1.0), gaussian_eps(-0.2, 1.0));
    for (auto kind : {SamplerKind::dpmpp_3m_sde, SamplerKind::ddpm_ancestral}) {
        const SamplerConfig c = config(kind, 20, 3.0, 5);
        CHECK(sample(p, 12, 3, cosine(), c) == sample(p, 12, 3, cosine(), c));
        CHECK(sample(p, 12, 3, cosine(), c) != sample(p, 12, 3, cosine(), config(kind, 20, 3.0, 6)));
    }
}

TEST_CASE("both samplers recover a Gaussian target") {
    const double mu = 0.7, sd = 0.5;
    FunctionNoisePredictor p(gaussian_eps(mu, sd), gaussian_eps(mu, sd));
    const Moments dpm = moments(sample(p, 10000, 1, cosine(), config(SamplerKind::dpmpp_3m_sde, 150)));
    const Moments ddpm = moments(sample(p, 10000, 1, cosine(), config(SamplerKind::ddpm_ancestral, 1000)));
    INFO("dpm " << dpm.mean << " / " << dpm.sd << ", ddpm " << ddpm.mean << " / " << ddpm.sd);
    CHECK(std::abs(dpm.mean - mu) < 0.02);
    CHECK(std::abs(dpm.sd - sd) < 0.03);
    CHECK(std::abs(ddpm.mean - mu) < 0.02);
    CHECK(std::abs(ddpm.sd - sd) < 0.03);
    CHECK(std::abs(dpm.mean - ddpm.mean) < 0.05 * std::abs(ddpm.mean));
    CHECK(std::abs(dpm.sd - ddpm.sd) < 0.05 * ddpm.sd);
}

TEST_CASE("guidance moves samples toward and past the conditional mean") {
    const double cond_mu = 1.0, uncond_mu = -1.0, sd = 0.5;
    FunctionNoisePredictor p(gaussian_eps(cond_mu, sd), gaussian_eps(uncond_mu, sd));
    std::vector<double> means;
    for (double g : {0.0, 1.0, 5.0})
        means.push_back(moments(sample(p, 4000, 1, cosine(), config(SamplerKind::dpmpp_3m_sde, 150, g))).mean);
    INFO("means " << means[0] << " " << means[1] << " " << means[2]);
    CHECK(means[0] < means[1]);
    CHECK(means[1] < means[2]);
    CHECK(means[0] == Approx(uncond_mu).margin(0.05));
    CHECK(means[1] == Approx(cond_mu).margin(0.05));
    CHECK(means[2] > cond_mu);
}

TEST_CASE("marginals do not depend on sequence length") {
    FunctionNoisePredictor p(gaussian_eps(-0.3, 0.8), gaussian_eps(-0.3, 0.8));
    const int draws = 1500;
    Matrix short_first(draws, 1), short_last(draws, 1), long_first(draws, 1), long_last(draws, 1);
    for (int i = 0; i < draws; ++i) {
        const Matrix a = sample(p, 8, 1, cosine(), config(SamplerKind::dpmpp_3m_sde, 150, 1.0, 1000 + i));
        const Matrix b = sample(p, 64, 1, cosine(), config(SamplerKind::dpmpp_3m_sde, 150, 1.0, 9000 + i));
        short_first(i, 0) = a(0, 0);
        short_last(i, 0) = a(7, 0);
        long_first(i, 0) = b(0, 0);
        long_last(i, 0) = b(63, 0);
    }
    // Standard errors at 1500 draws of sd 0.8: mean 0.021, sd 0.015.
    for (const Matrix* m : {&short_first, &short_last, &long_first, &long_last}) {
        const Moments mo = moments(*m);
        INFO("mean " << mo.mean << " sd " << mo.sd);
        CHECK(mo.mean == Approx(-0.3).margin(0.07));
        CHECK(mo.sd == Approx(0.8).margin(0.06));
    }
    CHECK(std::abs(moments(short_first).mean - moments(long_first).mean) < 0.09);
    CHECK(std::abs(moments(short_last).sd - moments(long_last).sd) < 0.06);
}

TEST_CASE("failures: over-length, bad config and non-finite state") {
    CappedPredictor capped;
    CHECK(sample(capped, 16, 2, cosine(), config(SamplerKind::ddpm_ancestral, 3)).rows() == 16);
    CHECK_THROWS_AS(sample(capped, 17, 2, cosine(), config(SamplerKind::ddpm_ancestral, 3)), SequenceTooLong);
    CHECK_THROWS_AS(sample(capped, 4, 2, cosine(), config(SamplerKind::ddpm_ancestral, 0)), InvalidArgument);
    CHECK_THROWS_AS(sample(capped, 4, 2, cosine(), config(SamplerKind::ddpm_ancestral, 3, -1.0)),
                    InvalidArgument);

    auto nan_fn = [](const Matrix& z, double) { return Matrix::Constant(z.rows(), z.cols(), std::nan("")); };
    FunctionNoisePredictor bad(nan_fn, nan_fn);
    for (auto kind : {SamplerKind::dpmpp_3m_sde, SamplerKind::ddpm_ancestral}) {
        try {
            sample(bad, 4, 2, cosine(), config(kind, 5));
            FAIL("expected NumericFailure");
        } catch (const NumericFailure& e) {
            CHECK(std::string(e.what()).find("step 0") != std::string::npos);
        }
    }
}

TEST_CASE("sampler names round-trip") {
    CHECK(parse_sampler_kind("dpmpp_3m_sde") == SamplerKind::dpmpp_3m_sde);
    CHECK(parse_sampler_kind(to_string(SamplerKind::ddpm_ancestral)) == SamplerKind::ddpm_ancestral);
    CHECK_THROWS_AS(parse_sampler_kind("euler"), InvalidArgument);
}
