// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/inference.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "lova/conditioning.hpp"
#include "lova/dsp.hpp"
#include "lova/errors.hpp"
#include "lova/rng.hpp"

namespace lova {

namespace {

constexpr std::uint64_t kSegmentStream = 0x100;

// Latent tokens for `samples` audio samples, generated and decoded; the
// result is trimmed to exactly `samples`.
Waveform synthesize(const Matrix& condition, Eigen::Index samples, const ModelBundle& models,
                    const SamplerConfig& sampler) {
    const int r = models.vae.config().compression_ratio();
    const Eigen::Index tokens = latent_length(samples, r);
    const auto& cfg = models.denoiser.config();
    if (tokens > cfg.max_tokens)
        throw SequenceTooLong("generation needs " + std::to_string(tokens) +
                                  " latent tokens; use split mode or a model with larger PE_z",
                              static_cast<std::size_t>(tokens), static_cast<std::size_t>(cfg.max_tokens));
    if (condition.rows() > cfg.max_cond)
        throw SequenceTooLong("generation condition rows; use split mode", static_cast<std::size_t>(condition.rows()),
                              static_cast<std::size_t>(cfg.max_cond));
    const DiTNoisePredictor predictor(models.denoiser, condition);
    const Matrix latent = sample(predictor, tokens, cfg.latent_dim, models.schedule, sampler);
    Waveform audio = models.vae.decode(latent / models.vae.latent_scale(), models.rate);
    audio.samples.conservativeResize(samples, Eigen::NoChange);
    return audio;
}

Waveform to_output_rate(Waveform audio, int output_rate) {
    if (output_rate <= 0 || output_rate == audio.rate) return audio;
    return resample(audio, output_rate);
}

}  // namespace

Eigen::Index GenerationRequest::frame_rows() const { return frame_count(duration_seconds, fps); }

Eigen::Index GenerationRequest::samples_at(int rate) const {
    return static_cast<Eigen::Index>(std::llround(duration_seconds * rate));
}

SplitPlan SplitPlan::make(double duration, double split) {
    if (!(split > 0.0)) throw InvalidArgument("split duration must be positive");
    if (!(duration > 0.0)) throw InvalidArgument("duration must be positive");
    SplitPlan plan;
    plan.split_duration = split;
    const int n = static_cast<int>(std::ceil(duration / split - 1e-9));
    for (int k = 0; k < n; ++k) plan.segments.push_back({k * split, std::min(duration, (k + 1) * split)});
    plan.num_inferences = n;
    return plan;
}

Remainder parse_remainder(const std::string& name) {
    if (name == "true_length") return Remainder::true_length;
    if (name == "pad_and_trim") return Remainder::pad_and_trim;
    throw InvalidArgument("unknown remainder policy '" + name + "' (expected true_length or pad_and_trim)");
}

const char* to_string(Remainder r) { return r == Remainder::true_length ? "true_length" : "pad_and_trim"; }

GenerationResult generate_full(const GenerationRequest& req, const ModelBundle& models) {
    if (!(req.duration_seconds > 0.0)) throw InvalidArgument("duration must be positive");
    if (req.condition.rows() != req.frame_rows())
        throw InvalidArgument("condition has " + std::to_string(req.condition.rows()) + " rows, expected " +
                              std::to_string(req.frame_rows()) + " for the requested duration");
    GenerationResult out;
    out.mode = "full";
    out.audio = to_output_rate(synthesize(req.condition, req.samples_at(models.rate), models, req.sampler),
                               req.output_rate);
    out.num_inferences = 1;
    out.seeds.push_back(req.sampler.seed);
    return out;
}

GenerationResult generate_split_concat(const GenerationRequest& req, const ModelBundle& models, double split,
                                       Remainder remainder) {
    if (req.condition.rows() != req.frame_rows())
        throw InvalidArgument("condition has " + std::to_string(req.condition.rows()) + " rows, expected " +
                              std::to_string(req.frame_rows()) + " for the requested duration");
    const SplitPlan plan = SplitPlan::make(req.duration_seconds, split);
    const Eigen::Index total = req.samples_at(models.rate);
    GenerationResult out;
    out.mode = "split";
    out.audio.rate = models.rate;
    out.audio.samples.resize(total, models.vae.config().channels);

    Eigen::Index written = 0;
    for (std::size_t k = 0; k < plan.segments.size(); ++k) {
        const Segment& seg = plan.segments[k];
        const auto s0 = static_cast<Eigen::Index>(std::llround(seg.start * models.rate));
        const auto s1 = std::min(total, static_cast<Eigen::Index>(std::llround(seg.end * models.rate)));
        const bool pad = remainder == Remainder::pad_and_trim && seg.length() < split - 1e-9;
        const double gen_seconds = pad ? split : seg.length();

        const auto r0 = std::min<Eigen::Index>(req.condition.rows() - 1, std::llround(seg.start * req.fps));
        const Eigen::Index rows = frame_count(gen_seconds, req.fps);
        Matrix cond(rows, req.condition.cols());
        for (Eigen::Index i = 0; i < rows; ++i)
            cond.row(i) = req.condition.row(std::min(req.condition.rows() - 1, r0 + i));

        SamplerConfig sc = req.sampler;
        sc.seed = derive_seed(req.sampler.seed, kSegmentStream + k);
        out.seeds.push_back(sc.seed);
        const auto gen_samples = static_cast<Eigen::Index>(std::llround(gen_seconds * models.rate));
        const Waveform piece = synthesize(cond, gen_samples, models, sc);
        const Eigen::Index take = s1 - s0;
        out.audio.samples.middleRows(s0, take) = piece.samples.topRows(take);
        if (k > 0) out.boundaries.push_back(s0);
        written = s1;
    }
    if (written != total) throw NumericFailure("split plan did not cover the requested duration");
    out.num_inferences = plan.num_inferences;
    out.plan = plan;
    if (req.output_rate > 0 && req.output_rate != models.rate) {
        for (auto& b : out.boundaries)
            b = static_cast<Eigen::Index>(std::llround(static_cast<double>(b) * req.output_rate / models.rate));
        out.audio = resample(out.audio, req.output_rate);
    }
    return out;
}

double count_inferences(const std::vector<double>& durations, std::optional<double> split) {
    if (durations.empty()) throw InvalidArgument("count_inferences: no durations");
    if (!split) return 1.0;
    double total = 0.0;
    for (double d : durations) total += SplitPlan::make(d, *split).num_inferences;
    return total / static_cast<double>(durations.size());
}

std::string provenance_json(const GenerationRequest& req, const GenerationResult& res,
                            const std::string& config_hash) {
    nlohmann::ordered_json j;
    j["mode"] = res.mode;
    j["duration_seconds"] = req.duration_seconds;
    j["rate"] = res.audio.rate;
    j["samples"] = res.audio.num_samples();
    j["num_inferences"] = res.num_inferences;
    j["config_hash"] = config_hash;
    j["sampler"] = {{"kind", to_string(req.sampler.kind)},
                    {"steps", req.sampler.steps},
                    {"guidance_scale", req.sampler.guidance_scale},
                    {"seed", req.sampler.seed}};
    j["seeds"] = res.seeds;
    if (res.plan) {
        nlohmann::ordered_json segs = nlohmann::ordered_json::array();
        for (const auto& s : res.plan->segments) segs.push_back({s.start, s.end});
        j["split_plan"] = {{"split_duration", res.plan->split_duration}, {"segments", segs}};
        j["boundaries"] = res.boundaries;
    }
    return j.dump(2) + "\n";
}

void write_provenance(const std::filesystem::path& path, const GenerationRequest& req, const GenerationResult& res,
                      const std::string& config_hash) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write provenance: " + path.string());
    f << provenance_json(req, res, config_hash);
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace lova
