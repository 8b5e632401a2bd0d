// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic paired (feature track, audio) examples.
//
// Audio is a class carrier tone whose amplitude follows an event envelope.
// Each frame's feature row is class one-hot | envelope value | sin, cos of a
// 1 s position phase. One per-example detail is not in the features: a
// register variant that lowers the carrier by a major third. A generator has
// to pick one and keep it for the whole clip.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lova/autograd.hpp"
#include "lova/conditioning.hpp"
#include "lova/wav.hpp"

namespace lova {

struct SyntheticSpec {
    int num_classes = 8;
    double min_duration = 10.0;
    double max_duration = 10.0;
    int rate = 8000;
    double fps = kDefaultFps;
    std::uint64_t seed = 0;
    /// Carriers are snapped to multiples of rate / compression_ratio; 0 disables.
    int compression_ratio = 320;

    /// Fixed 10 s clips.
    static SyntheticSpec pretrain_split(std::uint64_t seed = 0);
    /// Durations uniform on [10, 60] s.
    static SyntheticSpec finetune_split(std::uint64_t seed = 0);

    int feature_dim() const { return num_classes + 3; }
    void validate() const;
};

struct Event {
    double onset = 0.0;
    double offset = 0.0;
    double amplitude = 1.0;
};

struct PairedExample {
    std::string id;
    int label = 0;
    double duration = 0.0;
    std::uint64_t seed = 0;
    int variant = 0;
    double carrier_hz = 0.0;
    std::vector<Event> timeline;
    Matrix features;  // [N, num_classes + 3]
    Waveform audio;   // mono
};

/// Base carrier of a class before the variant shift.
double class_carrier(const SyntheticSpec& spec, int label);

/// Envelope in [0.15, 1] at time t.
double envelope_at(const std::vector<Event>& timeline, double t);

/// Pure function of (spec, label, seed).
PairedExample generate_example(const SyntheticSpec& spec, int label, std::uint64_t seed, const std::string& id = "");

/// Frame sequence whose payloads are the feature rows.
FrameSequence frames_of(const PairedExample& example, double fps);

struct ManifestRow {
    std::string id;
    int label = 0;
    double duration = 0.0;
    std::uint64_t seed = 0;
    std::string wav_path;   // relative to the corpus directory
    std::string feat_path;  // relative to the corpus directory
};

struct Corpus {
    std::filesystem::path dir;
    SyntheticSpec spec;
    std::vector<ManifestRow> rows;

    const ManifestRow& find(const std::string& id) const;
};

/// Writes count examples (WAV, feature file) plus manifest.csv and
/// corpus.cfg into `dir`. Example i has class i mod K.
Corpus make_corpus(const SyntheticSpec& spec, int count, const std::filesystem::path& dir);

Corpus load_corpus(const std::filesystem::path& dir);

struct LoadedExample {
    ManifestRow row;
    Matrix features;
    Waveform audio;
};

LoadedExample load_example(const Corpus& corpus, const ManifestRow& row);

/// Regenerates an example from its manifest row without touching its files.
PairedExample regenerate(const Corpus& corpus, const ManifestRow& row);

int class_of(const Corpus& corpus, const std::string& id);

/// Frame-rate RMS of the audio, one value per feature row.
Eigen::VectorXd frame_energy(const Waveform& audio, double fps, Eigen::Index frames);

}  // namespace lova
