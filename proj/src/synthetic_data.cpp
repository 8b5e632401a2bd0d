// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lova/errors.hpp"
#include "lova/rng.hpp"

namespace lova {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFloor = 0.15;
constexpr double kLowCarrier = 220.0;
constexpr double kHighCarrier = 3520.0;
constexpr double kGain = 0.5;

double snap(double hz, const SyntheticSpec& spec) {
    if (spec.compression_ratio <= 0) return hz;
    const double grid = static_cast<double>(spec.rate) / spec.compression_ratio;
    return std::max(grid, std::round(hz / grid) * grid);
}

}  // namespace

SyntheticSpec SyntheticSpec::pretrain_split(std::uint64_t seed) {
    SyntheticSpec s;
    s.seed = seed;
    return s;
}

SyntheticSpec SyntheticSpec::finetune_split(std::uint64_t seed) {
    SyntheticSpec s;
    s.min_duration = 10.0;
    s.max_duration = 60.0;
    s.seed = seed;
    return s;
}

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw InvalidArgument("synthetic: need at least two classes");
    if (!(min_duration > 0.0) || max_duration < min_duration)
        throw InvalidArgument("synthetic: invalid duration range");
    if (rate <= 0 || !(fps > 0.0)) throw InvalidArgument("synthetic: rate and fps must be positive");
}

double class_carrier(const SyntheticSpec& spec, int label) {
    const double ratio = kHighCarrier / kLowCarrier;
    return kLowCarrier * std::pow(ratio, static_cast<double>(label) / (spec.num_classes - 1));
}

double envelope_at(const std::vector<Event>& timeline, double t) {
    double e = kFloor;
    for (const auto& ev : timeline) {
        if (t <= ev.onset || t >= ev.offset) continue;
        const double u = (t - ev.onset) / (ev.offset - ev.onset);
        e += ev.amplitude * 0.5 * (1.0 - std::cos(2.0 * kPi * u));
    }
    return std::min(1.0, e);
}

PairedExample generate_example(const SyntheticSpec& spec, int label, std::uint64_t seed, const std::string& id) {
    spec.validate();
    if (label < 0 || label >= spec.num_classes) throw InvalidArgument("synthetic: label out of range");
    Rng rng(seed);
    PairedExample ex;
    ex.id = id;
    ex.label = label;
    ex.seed = seed;

    const double raw = spec.min_duration + rng.uniform() * (spec.max_duration - spec.min_duration);
    ex.duration = std::max(spec.min_duration, std::round(raw * spec.fps) / spec.fps);
    ex.variant = static_cast<int>(rng.below(2));
    const double base = class_carrier(spec, label) * (ex.variant == 1 ? std::pow(2.0, -1.0 / 3.0) : 1.0);
    ex.carrier_hz = snap(base, spec);

    // 1 to 4 events per started 10 s of audio.
    const int windows = static_cast<int>(std::ceil(ex.duration / 10.0 - 1e-9));
    for (int w = 0; w < windows; ++w) {
        const int events = 1 + static_cast<int>(rng.below(4));
        const double w0 = 10.0 * w, w1 = std::min(ex.duration, w0 + 10.0);
        for (int k = 0; k < events; ++k) {
            Event ev;
            const double len = 0.5 + 2.5 * rng.uniform();
            ev.onset = w0 + rng.uniform() * std::max(0.0, w1 - w0 - 0.25) - 0.25 * len;
            ev.offset = ev.onset + len;
            ev.amplitude = 0.5 + 0.5 * rng.uniform();
            ex.timeline.push_back(ev);
        }
    }

    const auto samples = static_cast<Eigen::Index>(std::llround(ex.duration * spec.rate));
    ex.audio.rate = spec.rate;
    ex.audio.samples.resize(samples, 1);
    for (Eigen::Index i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / spec.rate;
        ex.audio.samples(i, 0) = kGain * envelope_at(ex.timeline, t) * std::sin(2.0 * kPi * ex.carrier_hz * t);
    }

    const Eigen::Index n = frame_count(ex.duration, spec.fps);
    ex.features = Matrix::Zero(n, spec.feature_dim());
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = frame_timestamp(k, spec.fps);
        ex.features(k, label) = 1.0;
        ex.features(k, spec.num_classes) = envelope_at(ex.timeline, t);
        ex.features(k, spec.num_classes + 1) = std::sin(2.0 * kPi * t);
        ex.features(k, spec.num_classes + 2) = std::cos(2.0 * kPi * t);
    }
    return ex;
}

FrameSequence frames_of(const PairedExample& example, double fps) {
    FrameSequence seq;
    seq.fps = fps;
    for (Eigen::Index k = 0; k < example.features.rows(); ++k) {
        Frame f;
        f.timestamp = frame_timestamp(k, fps);
        f.payload.assign(example.features.row(k).data(), example.features.row(k).data() + example.features.cols());
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

const ManifestRow& Corpus::find(const std::string& id) const {
    for (const auto& r : rows)
        if (r.id == id) return r;
    throw InvalidArgument("corpus has no example '" + id + "'");
}

namespace {

void write_spec(const std::filesystem::path& path, const SyntheticSpec& s) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << std::setprecision(17) << "num_classes=" << s.num_classes << "\nmin_duration=" << s.min_duration
      << "\nmax_duration=" << s.max_duration << "\nrate=" << s.rate << "\nfps=" << s.fps << "\nseed=" << s.seed
      << "\ncompression_ratio=" << s.compression_ratio << "\n";
    if (!f) throw IoError("write failed: " + path.string());
}

SyntheticSpec read_spec(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path.string());
    SyntheticSpec s;
    std::string line;
    while (std::getline(f, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        if (k == "num_classes") s.num_classes = std::stoi(v);
        else if (k == "min_duration") s.min_duration = std::stod(v);
        else if (k == "max_duration") s.max_duration = std::stod(v);
        else if (k == "rate") s.rate = std::stoi(v);
        else if (k == "fps") s.fps = std::stod(v);
        else if (k == "seed") s.seed = std::stoull(v);
        else if (k == "compression_ratio") s.compression_ratio = std::stoi(v);
        else throw IoError("unknown key '" + k + "' in " + path.string());
    }
    return s;
}

}  // namespace

Corpus make_corpus(const SyntheticSpec& spec, int count, const std::filesystem::path& dir) {
    spec.validate();
    if (count < 1) throw InvalidArgument("make_corpus: count must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    Corpus corpus{dir, spec, {}};
    for (int i = 0; i < count; ++i) {
        std::ostringstream id;
        id << "ex" << std::setw(5) << std::setfill('0') << i;
        const int label = i % spec.num_classes;
        const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
        const PairedExample ex = generate_example(spec, label, seed, id.str());
        ManifestRow row{id.str(), label, ex.duration, seed, id.str() + ".wav", id.str() + ".feat"};
        write_wav(dir / row.wav_path, ex.audio, WavEncoding::float32);
        write_feature_file(dir / row.feat_path, ex.features);
        corpus.rows.push_back(row);
    }

    const auto manifest = dir / "manifest.csv";
    std::ofstream f(manifest);
    if (!f) throw IoError("cannot write " + manifest.string());
    f << "id,class,duration_seconds,seed,wav_path,feat_path\n" << std::setprecision(17);
    for (const auto& r : corpus.rows)
        f << r.id << ',' << r.label << ',' << r.duration << ',' << r.seed << ',' << r.wav_path << ',' << r.feat_path
          << '\n';
    if (!f) throw IoError("write failed: " + manifest.string());
    write_spec(dir / "corpus.cfg", spec);
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& dir) {
    Corpus corpus;
    corpus.dir = dir;
    corpus.spec = read_spec(dir / "corpus.cfg");
    const auto manifest = dir / "manifest.csv";
    std::ifstream f(manifest);
    if (!f) throw IoError("cannot read " + manifest.string());
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw IoError("malformed manifest row in " + manifest.string() + ": " + line);
        corpus.rows.push_back({cells[0], std::stoi(cells[1]), std::stod(cells[2]), std::stoull(cells[3]), cells[4],
                               cells[5]});
    }
    return corpus;
}

LoadedExample load_example(const Corpus& corpus, const ManifestRow& row) {
    return {row, read_feature_file(corpus.dir / row.feat_path), read_wav(corpus.dir / row.wav_path)};
}

PairedExample regenerate(const Corpus& corpus, const ManifestRow& row) {
    return generate_example(corpus.spec, row.label, row.seed, row.id);
}

int class_of(const Corpus& corpus, const std::string& id) { return corpus.find(id).label; }

Eigen::VectorXd frame_energy(const Waveform& audio, double fps, Eigen::Index frames) {
    Eigen::VectorXd e(frames);
    const double span = audio.rate / fps;
    for (Eigen::Index k = 0; k < frames; ++k) {
        const double center = frame_timestamp(k, fps) * audio.rate;
        const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(center - span / 2));
        const auto hi = std::min<Eigen::Index>(audio.num_samples(), static_cast<Eigen::Index>(center + span / 2));
        double acc = 0.0;
        for (Eigen::Index i = lo; i < hi; ++i) acc += audio.samples.row(i).squaredNorm();
        e(k) = hi > lo ? std::sqrt(acc / static_cast<double>(hi - lo)) : 0.0;
    }
    return e;
}

}  // namespace lova
