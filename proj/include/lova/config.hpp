// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Flat run configuration: "section.key=value" lines, '#' comments. Every key
// has a default; unknown keys are rejected.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lova/audio_vae.hpp"
#include "lova/dit.hpp"
#include "lova/sampler.hpp"
#include "lova/synthetic_data.hpp"
#include "lova/training.hpp"

namespace lova {

class RunConfig {
public:
    RunConfig();

    static RunConfig from_file(const std::filesystem::path& path);
    void merge_text(const std::string& text, const std::string& origin = "<text>");
    /// Applies one "key=value" override.
    void set_assignment(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    /// Parses every key into its typed view; throws UsageError on the first bad value.
    void validate() const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;

    /// Sorted "key=value" lines; the hash input.
    std::string canonical_text() const;
    /// 16 hex digits of FNV-1a over `canonical_text()`.
    std::string hash() const;

    static const std::vector<std::pair<std::string, std::string>>& defaults();

    VaeConfig vae() const;
    DiTConfig dit(int latent_dim, int cond_dim) const;
    TrainConfig train(Phase phase) const;
    SamplerConfig sampler() const;
    SyntheticSpec synthetic(const std::string& split) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace lova
