// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lova/errors.hpp"
#include "lova/params.hpp"

namespace lova {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& RunConfig::defaults() {
    static const std::vector<std::pair<std::string, std::string>> d = {
        {"data.rate", "8000"},
        {"data.fps", "8"},
        {"data.classes", "8"},
        {"data.seed", "0"},
        {"data.eval_duration", "30"},
        {"vae.strides", "320"},
        {"vae.latent_dim", "32"},
        {"vae.hidden", "128"},
        {"vae.kl_weight", "1e-4"},
        {"vae.lr", "1e-3"},
        {"vae.steps", "1500"},
        {"vae.batch", "8"},
        {"vae.crop_seconds", "1"},
        {"vae.seed", "0"},
        {"model.depth", "4"},
        {"model.heads", "4"},
        {"model.token_dim", "128"},
        {"model.mlp_ratio", "4"},
        {"model.max_tokens", "1500"},
        {"model.max_cond", "480"},
        {"model.seed", "0"},
        {"schedule.kind", "cosine"},
        {"schedule.steps", "1000"},
        {"pretrain.lr", "1e-4"},
        {"pretrain.warmup", "500"},
        {"pretrain.epochs", "30"},
        {"pretrain.batch", "4"},
        {"finetune.lr", "3e-5"},
        {"finetune.warmup", "500"},
        {"finetune.epochs", "10"},
        {"finetune.batch", "2"},
        {"train.weight_decay", "0.01"},
        {"train.clip_norm", "1.0"},
        {"train.cond_dropout", "0.1"},
        {"train.ema_decay", "0.999"},
        {"train.seed", "0"},
        {"train.checkpoint_every", "0"},
        {"sampler.kind", "dpmpp_3m_sde"},
        {"sampler.steps", "150"},
        {"sampler.guidance", "5.0"},
        {"sampler.seed", "0"},
        {"eval.window", "10"},
        {"eval.hop", "5"},
        {"eval.embed_dim", "16"},
        {"eval.embed_seed", "7"},
        {"eval.classifier_iters", "500"},
        {"eval.probe_seconds", "10"},
    };
    return d;
}

RunConfig::RunConfig() {
    for (const auto& [k, v] : defaults()) values_[k] = v;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config: " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    RunConfig c;
    c.merge_text(ss.str(), path.string());
    return c;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.find('=') == std::string::npos)
            throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        try {
            set_assignment(line);
        } catch (const UsageError& e) {
            throw UsageError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void RunConfig::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw UsageError("unknown config key '" + key + "'");
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    int out = 0;
    try {
        out = std::stoi(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw UsageError("config key '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw UsageError("config key '" + key + "' expects a number, got '" + v + "'");
    return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    std::uint64_t out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size() || v.front() == '-')
        throw UsageError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

void RunConfig::validate() const {
    const VaeConfig v = vae();
    (void)dit(v.latent_dim, synthetic("pretrain").feature_dim());
    (void)train(Phase::pretrain);
    (void)train(Phase::finetune);
    (void)sampler();
    (void)synthetic("eval");
    get_int("vae.steps");
    get_int("vae.batch");
    get_double("vae.lr");
    get_double("vae.crop_seconds");
    get_u64("vae.seed");
    get_u64("model.seed");
    for (const char* k : {"eval.window", "eval.hop", "eval.probe_seconds"}) get_double(k);
    for (const char* k : {"eval.embed_dim", "eval.classifier_iters"}) get_int(k);
    get_u64("eval.embed_seed");
}

std::string RunConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

std::string RunConfig::hash() const {
    const std::string text = canonical_text();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
    return buf;
}

VaeConfig RunConfig::vae() const {
    VaeConfig c;
    c.strides.clear();
    std::stringstream ss(get("vae.strides"));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        std::size_t pos = 0;
        try {
            c.strides.push_back(std::stoi(t, &pos));
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != t.size()) throw UsageError("config key 'vae.strides' expects comma-separated integers");
    }
    if (c.strides.empty()) throw UsageError("config key 'vae.strides' is empty");
    c.latent_dim = get_int("vae.latent_dim");
    c.hidden = get_int("vae.hidden");
    c.kl_weight = get_double("vae.kl_weight");
    return c;
}

DiTConfig RunConfig::dit(int latent_dim, int cond_dim) const {
    DiTConfig c;
    c.depth = get_int("model.depth");
    c.heads = get_int("model.heads");
    c.token_dim = get_int("model.token_dim");
    c.mlp_ratio = get_double("model.mlp_ratio");
    c.max_tokens = get_int("model.max_tokens");
    c.max_cond = get_int("model.max_cond");
    c.latent_dim = latent_dim;
    c.cond_dim = cond_dim;
    c.validate();
    return c;
}

TrainConfig RunConfig::train(Phase phase) const {
    const std::string p = to_string(phase);
    TrainConfig c;
    c.optimizer.lr = get_double(p + ".lr");
    c.optimizer.warmup_steps = get_int(p + ".warmup");
    c.optimizer.weight_decay = get_double("train.weight_decay");
    c.optimizer.clip_norm = get_double("train.clip_norm");
    c.batch_size = get_int(p + ".batch");
    c.cond_dropout = get_double("train.cond_dropout");
    c.ema_decay = get_double("train.ema_decay");
    c.seed = get_u64("train.seed");
    c.checkpoint_every = get_int("train.checkpoint_every");
    c.schedule = parse_schedule_kind(get("schedule.kind"));
    c.diffusion_steps = get_int("schedule.steps");
    return c;
}

SamplerConfig RunConfig::sampler() const {
    SamplerConfig c;
    c.kind = parse_sampler_kind(get("sampler.kind"));
    c.steps = get_int("sampler.steps");
    c.guidance_scale = get_double("sampler.guidance");
    c.seed = get_u64("sampler.seed");
    c.validate();
    return c;
}

SyntheticSpec RunConfig::synthetic(const std::string& split) const {
    SyntheticSpec s;
    if (split == "pretrain") {
        s = SyntheticSpec::pretrain_split();
    } else if (split == "finetune") {
        s = SyntheticSpec::finetune_split();
    } else if (split == "eval") {
        s.min_duration = s.max_duration = get_double("data.eval_duration");
    } else {
        throw UsageError("unknown data split '" + split + "' (expected pretrain, finetune or eval)");
    }
    s.rate = get_int("data.rate");
    s.fps = get_double("data.fps");
    s.num_classes = get_int("data.classes");
    s.seed = get_u64("data.seed");
    int ratio = 1;
    for (int st : vae().strides) ratio *= st;
    s.compression_ratio = ratio;
    s.validate();
    return s;
}

}  // namespace lova
