// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Long-form generation in one denoising pass, and the split-generate-
// concatenate adapter used by fixed-length generators.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lova/audio_vae.hpp"
#include "lova/diffusion_core.hpp"
#include "lova/dit.hpp"
#include "lova/sampler.hpp"
#include "lova/wav.hpp"

namespace lova {

struct GenerationRequest {
    double duration_seconds = 10.0;
    /// Raw per-frame features, round(duration * fps) rows.
    Matrix condition;
    double fps = 8.0;
    SamplerConfig sampler;
    /// Output rate; 0 keeps the VAE rate.
    int output_rate = 0;

    Eigen::Index frame_rows() const;
    Eigen::Index samples_at(int rate) const;
};

struct ModelBundle {
    const DiT& denoiser;
    const AudioVae& vae;
    const NoiseSchedule& schedule;
    /// Rate the VAE was trained at.
    int rate = 8000;
};

struct Segment {
    double start = 0.0;
    double end = 0.0;
    double length() const { return end - start; }
};

struct SplitPlan {
    double split_duration = 0.0;
    std::vector<Segment> segments;
    int num_inferences = 0;

    static SplitPlan make(double duration, double split_duration);
};

/// What to do with a final segment shorter than the split length.
enum class Remainder {
    /// Generate it at its true length (the model is variable-length).
    true_length,
    /// Generate a full split-length segment and trim, as a fixed-length
    /// generator would; missing condition rows repeat the last frame.
    pad_and_trim,
};

Remainder parse_remainder(const std::string& name);
const char* to_string(Remainder r);

struct GenerationResult {
    Waveform audio;
    int num_inferences = 0;
    std::string mode;
    std::optional<SplitPlan> plan;
    /// Sample indices where independently generated segments meet.
    std::vector<Eigen::Index> boundaries;
    std::vector<std::uint64_t> seeds;
};

/// One sampler run over the whole latent sequence, then decode and trim.
GenerationResult generate_full(const GenerationRequest& request, const ModelBundle& models);

/// Independent generation per segment with fresh noise and condition rows
/// re-indexed from position 0, then direct concatenation.
GenerationResult generate_split_concat(const GenerationRequest& request, const ModelBundle& models,
                                       double split_duration, Remainder remainder = Remainder::true_length);

/// Mean inferences per video: ceil(d / split) in split mode, 1 in full mode.
double count_inferences(const std::vector<double>& durations, std::optional<double> split_duration);

/// JSON sidecar describing how an output was produced.
std::string provenance_json(const GenerationRequest& request, const GenerationResult& result,
                            const std::string& config_hash);
void write_provenance(const std::filesystem::path& path, const GenerationRequest& request,
                      const GenerationResult& result, const std::string& config_hash);

}  // namespace lova
