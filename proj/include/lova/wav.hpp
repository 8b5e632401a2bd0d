// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "lova/autograd.hpp"

namespace lova {

/// Multi-channel sampled audio. `samples` is [T, channels].
struct Waveform {
    Matrix samples;
    int rate = 44100;

    Eigen::Index num_samples() const { return samples.rows(); }
    Eigen::Index channels() const { return samples.cols(); }
    double duration() const { return static_cast<double>(samples.rows()) / rate; }
};

enum class WavEncoding { pcm16, float32 };

/// Writes RIFF/WAVE, little-endian. Samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& audio,
               WavEncoding encoding = WavEncoding::float32);

/// Reads 16-bit PCM or 32-bit float WAVE files, mono or stereo.
Waveform read_wav(const std::filesystem::path& path);

}  // namespace lova
