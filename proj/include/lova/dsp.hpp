// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "lova/autograd.hpp"
#include "lova/wav.hpp"

namespace lova {

/// Band-limited rational resampling with a Kaiser-windowed sinc kernel.
/// Output length is round(T * target / rate). Same rate returns the input.
Waveform resample(const Waveform& audio, int target_rate);

struct MelConfig {
    int rate = 16000;
    int bands = 64;
    double frame_seconds = 0.025;
    double hop_seconds = 0.010;
    double floor = 1e-6;

    int frame_length() const;
    int hop_length() const;
    int fft_size() const;
};

/// HTK-style triangular filterbank, [bands, fft_size / 2 + 1].
Matrix mel_filterbank(const MelConfig& config);

/// Log-mel spectrogram of a mono signal, [frames, bands]. Frame k covers
/// samples [k * hop, k * hop + frame_length); short input is zero-padded to
/// one frame.
Matrix log_mel(const Eigen::VectorXd& signal, const MelConfig& config);

/// Channel average of a waveform as a column vector.
Eigen::VectorXd mono(const Waveform& audio);

}  // namespace lova
