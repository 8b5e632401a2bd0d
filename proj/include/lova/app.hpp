// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Subcommands behind the `lova` executable. Each takes the resolved run
// config plus its own options and writes only to the paths it is given.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lova/config.hpp"
#include "lova/evaluation.hpp"

namespace lova {

using std::filesystem::path;

RunConfig resolve_config(const std::optional<path>& file, const std::vector<std::string>& overrides);

struct MakeDataOptions {
    path out;
    int count = 64;
    std::string split = "pretrain";
};
void make_data(const RunConfig& config, const MakeDataOptions& opt, std::ostream& log);

struct TrainVaeOptions {
    path data;
    path out;
};
void train_vae(const RunConfig& config, const TrainVaeOptions& opt, std::ostream& log);

struct TrainOptions {
    path data;
    path vae;
    path out;
    std::optional<path> from_checkpoint;  // finetune: required pretrain checkpoint
    std::optional<path> resume;           // continue a checkpoint of the same phase
    std::optional<path> curve;            // training-curve CSV
    std::optional<int> epochs;            // overrides <phase>.epochs
};
void pretrain(const RunConfig& config, const TrainOptions& opt, std::ostream& log);
void finetune(const RunConfig& config, const TrainOptions& opt, std::ostream& log);

struct GenerateOptions {
    path checkpoint;
    path vae;
    std::optional<path> features;  // cached-feature file
    std::optional<path> data;      // or a corpus directory plus an example id
    std::string id;
    std::string mode = "full";
    double split_duration = 10.0;
    std::string remainder = "true_length";
    std::optional<double> duration;
    std::optional<std::uint64_t> seed;
    bool raw_weights = false;  // use raw params instead of EMA
    path out;
};
void generate(const RunConfig& config, const GenerateOptions& opt, std::ostream& log);

struct EvaluateOptions {
    path generated;
    path reference;  // corpus directory with manifest.csv
    path out;        // MetricReport
    std::optional<path> csv;
};
MetricReport evaluate(const RunConfig& config, const EvaluateOptions& opt, std::ostream& log);

struct CompareOptions {
    path checkpoint;
    path vae;
    path data;  // evaluation corpus
    std::vector<std::string> splits = {"10", "20", "30", "full"};
    path out_dir;
    int limit = 0;
    bool raw_weights = false;
};
void compare_splits(const RunConfig& config, const CompareOptions& opt, std::ostream& log);

}  // namespace lova
