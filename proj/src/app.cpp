// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/app.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "lova/errors.hpp"
#include "lova/inference.hpp"
#include "lova/synthetic_data.hpp"

namespace lova {

namespace {

std::string text_hash(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
    return buf;
}

void warn_on_hash_mismatch(const TensorContainer& ckpt, const RunConfig& config, const std::string& what,
                           std::ostream& log) {
    if (!ckpt.contains("config")) return;
    const std::string stored = text_hash(ckpt.get_string("config"));
    if (stored != config.hash())
        log << "warning: config hash " << config.hash() << " differs from the " << what << " checkpoint's " << stored
            << "\n";
}

struct LoadedModels {
    AudioVae vae;
    DiT denoiser;
    NoiseSchedule schedule;
    int rate;
};

LoadedModels load_models(const RunConfig& config, const path& checkpoint, const path& vae_path, bool raw,
                         std::ostream& log) {
    const TensorContainer ckpt = TensorContainer::load(checkpoint);
    const TensorContainer vc = TensorContainer::load(vae_path);
    warn_on_hash_mismatch(ckpt, config, "denoiser", log);
    AudioVae vae = AudioVae::load(vc);
    DiT dit = load_denoiser(ckpt, !raw);
    NoiseSchedule sched = make_schedule(parse_schedule_kind(ckpt.get_string("schedule.kind")),
                                        static_cast<int>(ckpt.get_int("schedule.steps")));
    const int rate = static_cast<int>(vc.get_int("vae.rate"));
    if (dit.config().latent_dim != vae.config().token_dim())
        throw InvalidArgument("denoiser latent width " + std::to_string(dit.config().latent_dim) +
                              " does not match the VAE token width " + std::to_string(vae.config().token_dim()));
    return {std::move(vae), std::move(dit), std::move(sched), rate};
}

std::vector<TrainingExample> build_examples(const Corpus& corpus, const AudioVae& vae, std::uint64_t seed) {
    std::vector<TrainingExample> out;
    for (std::size_t i = 0; i < corpus.rows.size(); ++i) {
        const LoadedExample ex = load_example(corpus, corpus.rows[i]);
        const VaePosterior post = vae.encode(ex.audio);
        TrainingExample te;
        te.id = ex.row.id;
        te.latent = vae_sample(post, derive_seed(seed, 0x3000u + i)) * vae.latent_scale();
        te.condition = ex.features;
        out.push_back(std::move(te));
    }
    return out;
}

void run_training(const RunConfig& config, const TrainOptions& opt, Phase phase, std::ostream& log) {
    const Corpus corpus = load_corpus(opt.data);
    const TensorContainer vc = TensorContainer::load(opt.vae);
    const AudioVae vae = AudioVae::load(vc);
    const std::uint64_t vae_before = checksum(vae.params());

    const std::vector<TrainingExample> data = build_examples(corpus, vae, config.get_u64("train.seed"));
    const int epochs = opt.epochs ? *opt.epochs : config.get_int(std::string(to_string(phase)) + ".epochs");

    std::optional<Trainer> trainer;
    if (opt.resume) {
        const TensorContainer ck = TensorContainer::load(*opt.resume);
        warn_on_hash_mismatch(ck, config, "resumed", log);
        trainer.emplace(Trainer::resume(ck));
        if (trainer->phase() != phase)
            throw PreconditionError("--resume checkpoint is a " + std::string(to_string(trainer->phase())) +
                                    " checkpoint");
    } else if (phase == Phase::finetune) {
        if (!opt.from_checkpoint) throw UsageError("finetune requires --from-checkpoint");
        const TensorContainer ck = TensorContainer::load(*opt.from_checkpoint);
        warn_on_hash_mismatch(ck, config, "pretrain", log);
        trainer.emplace(Trainer::finetune_from(ck, config.train(phase)));
    } else {
        const int cond_dim = static_cast<int>(data.front().condition.cols());
        trainer.emplace(DiT(config.dit(vae.config().token_dim(), cond_dim), config.get_u64("model.seed")),
                        config.train(phase), phase);
    }
    trainer->set_config_text(config.canonical_text());
    log << "training " << to_string(phase) << ": " << data.size() << " examples, " << epochs << " epochs, "
        << trainer->trainable().size() << " trainable tensors\n";

    std::optional<CurveLog> curve_log;
    if (opt.curve) curve_log.emplace(*opt.curve);
    Trainer::CurveSink curve = [&](const CurvePoint& p) {
        if (curve_log) (*curve_log)(p);
    };
    Trainer::CheckpointSink sink = [&](const TensorContainer& c) { c.save(opt.out); };
    const TensorContainer final_ckpt = trainer->run(data, epochs, sink, curve);
    final_ckpt.save(opt.out);
    if (checksum(vae.params()) != vae_before) throw RegistryInconsistency("VAE parameters changed during training");
    log << "saved " << opt.out.string() << " at step " << trainer->step() << "\n";
}

Matrix condition_for(const GenerateOptions& opt, double fps, double& duration) {
    Matrix features;
    if (opt.features) {
        features = read_feature_file(*opt.features);
    } else if (opt.data) {
        if (opt.id.empty()) throw UsageError("--data requires --id");
        const Corpus corpus = load_corpus(*opt.data);
        features = read_feature_file(corpus.dir / corpus.find(opt.id).feat_path);
    } else {
        throw UsageError("generate needs --features or --data with --id");
    }
    duration = opt.duration ? *opt.duration : static_cast<double>(features.rows()) / fps;
    const Eigen::Index rows = frame_count(duration, fps);
    if (features.rows() < rows)
        throw InvalidArgument("condition has " + std::to_string(features.rows()) + " frames but " +
                              std::to_string(rows) + " are needed for " + std::to_string(duration) + " s");
    return features.topRows(rows);
}

GenerationResult run_generation(const GenerationRequest& req, const LoadedModels& m, const std::string& mode,
                                double split, Remainder remainder) {
    const ModelBundle bundle{m.denoiser, m.vae, m.schedule, m.rate};
    if (mode == "full") return generate_full(req, bundle);
    if (mode == "split") return generate_split_concat(req, bundle, split, remainder);
    throw UsageError("--mode must be full or split, got '" + mode + "'");
}

path sidecar_path(const path& wav) {
    path p = wav;
    p.replace_extension(".json");
    return p;
}

std::vector<Eigen::Index> probe_boundaries(double duration, double every, int rate) {
    std::vector<Eigen::Index> out;
    for (double t = every; t < duration - 1e-9; t += every)
        out.push_back(static_cast<Eigen::Index>(std::llround(t * rate)));
    return out;
}

}  // namespace

RunConfig resolve_config(const std::optional<path>& file, const std::vector<std::string>& overrides) {
    RunConfig c = file ? RunConfig::from_file(*file) : RunConfig();
    for (const auto& o : overrides) c.set_assignment(o);
    c.validate();
    return c;
}

void make_data(const RunConfig& config, const MakeDataOptions& opt, std::ostream& log) {
    if (opt.out.empty()) throw UsageError("make-data requires --out");
    const SyntheticSpec spec = config.synthetic(opt.split);
    const Corpus c = make_corpus(spec, opt.count, opt.out);
    log << "wrote " << c.rows.size() << " " << opt.split << " examples to " << opt.out.string() << "\n";
}

void train_vae(const RunConfig& config, const TrainVaeOptions& opt, std::ostream& log) {
    const Corpus corpus = load_corpus(opt.data);
    std::vector<Waveform> audio;
    for (const auto& row : corpus.rows) audio.push_back(load_example(corpus, row).audio);
    const int rate = corpus.spec.rate;

    AudioVae vae(config.vae(), config.get_u64("vae.seed"));
    const int r = vae.config().compression_ratio();
    AdamWConfig ac;
    ac.lr = config.get_double("vae.lr");
    ac.warmup_steps = 100;
    ac.weight_decay = 0.0;
    AdamW opt_state(ac);
    Rng rng(derive_seed(config.get_u64("vae.seed"), 0x4000));

    const auto crop = std::max<Eigen::Index>(
        r, static_cast<Eigen::Index>(std::llround(config.get_double("vae.crop_seconds") * rate)) / r * r);
    const int steps = config.get_int("vae.steps");
    const int batch = config.get_int("vae.batch");
    for (int s = 0; s < steps; ++s) {
        std::vector<Waveform> b;
        for (int i = 0; i < batch; ++i) {
            const Waveform& a = audio[rng.below(audio.size())];
            const Eigen::Index span = std::min(crop, a.num_samples());
            const Eigen::Index off = static_cast<Eigen::Index>(rng.below(
                static_cast<std::uint64_t>(a.num_samples() - span + 1)));
            b.push_back({a.samples.middleRows(off, span), rate});
        }
        const VaeLoss loss = vae.train_step(b, opt_state, rng);
        if (s % 250 == 0 || s + 1 == steps)
            log << "vae step " << s << " loss " << loss.total << " recon " << loss.reconstruction << " kl " << loss.kl
                << "\n";
    }

    // Latent scale 1/std over the corpus; reconstruction threshold on posterior means.
    double sum = 0.0, sq = 0.0, count = 0.0, recon = 0.0, recon_n = 0.0;
    for (std::size_t i = 0; i < audio.size(); ++i) {
        const VaePosterior post = vae.encode(audio[i]);
        const Matrix z = vae_sample(post, derive_seed(config.get_u64("train.seed"), 0x3000u + i));
        sum += z.sum();
        sq += z.squaredNorm();
        count += static_cast<double>(z.size());
        const Waveform rec = vae.decode(post.mean, rate);
        recon += (rec.samples.topRows(audio[i].num_samples()) - audio[i].samples).squaredNorm();
        recon_n += static_cast<double>(audio[i].samples.size());
    }
    const double mean = sum / count;
    const double stdev = std::sqrt(std::max(1e-12, sq / count - mean * mean));
    vae.set_latent_scale(1.0 / stdev);

    TensorContainer out;
    vae.save(out);
    out.put_int("vae.rate", rate);
    out.put("vae.recon_mse", Matrix::Constant(1, 1, recon / recon_n));
    out.put_string("config", config.canonical_text());
    out.save(opt.out);
    log << "saved VAE to " << opt.out.string() << " (latent scale " << vae.latent_scale() << ", recon mse "
        << recon / recon_n << ")\n";
}

void pretrain(const RunConfig& config, const TrainOptions& opt, std::ostream& log) {
    if (opt.from_checkpoint) throw UsageError("pretrain does not take --from-checkpoint");
    run_training(config, opt, Phase::pretrain, log);
}

void finetune(const RunConfig& config, const TrainOptions& opt, std::ostream& log) {
    if (!opt.from_checkpoint && !opt.resume) throw UsageError("finetune requires --from-checkpoint");
    run_training(config, opt, Phase::finetune, log);
}

void generate(const RunConfig& config, const GenerateOptions& opt, std::ostream& log) {
    if (opt.out.empty()) throw UsageError("generate requires --out");
    const LoadedModels m = load_models(config, opt.checkpoint, opt.vae, opt.raw_weights, log);
    GenerationRequest req;
    req.fps = config.get_double("data.fps");
    req.condition = condition_for(opt, req.fps, req.duration_seconds);
    req.sampler = config.sampler();
    if (opt.seed) req.sampler.seed = *opt.seed;
    const GenerationResult res =
        run_generation(req, m, opt.mode, opt.split_duration, parse_remainder(opt.remainder));
    write_wav(opt.out, res.audio, WavEncoding::float32);
    write_provenance(sidecar_path(opt.out), req, res, config.hash());
    log << "wrote " << opt.out.string() << ": " << res.audio.duration() << " s, " << res.num_inferences
        << " inference(s)\n";
}

MetricReport evaluate(const RunConfig& config, const EvaluateOptions& opt, std::ostream& log) {
    const Corpus ref = load_corpus(opt.reference);
    const double window = config.get_double("eval.window"), hop = config.get_double("eval.hop");

    std::vector<Waveform> train_clips;
    std::vector<int> labels;
    std::vector<const ManifestRow*> rows;
    std::vector<Waveform> gen_audio, ref_audio;
    for (const auto& row : ref.rows) {
        Waveform r = read_wav(ref.dir / row.wav_path);
        for (auto& c : segment_clips(r, window, hop).clips) {
            train_clips.push_back(std::move(c));
            labels.push_back(row.label);
        }
        const path g = opt.generated / row.wav_path;
        if (!std::filesystem::exists(g)) continue;
        rows.push_back(&row);
        gen_audio.push_back(read_wav(g));
        ref_audio.push_back(std::move(r));
    }
    if (rows.size() < 2) throw IoError("evaluate: fewer than 2 generated files match " + opt.reference.string());

    const MelClassifier classifier =
        MelClassifier::train(train_clips, labels, ref.spec.num_classes, config.get_int("eval.classifier_iters"));
    const MelStatsEmbedder embedder(config.get_int("eval.embed_dim"), config.get_u64("eval.embed_seed"));

    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix eg(n, embedder.dim()), er(n, embedder.dim());
    Matrix pg(n, classifier.num_classes()), pr(n, classifier.num_classes());
    std::int64_t clips_g = 0, clips_r = 0, padded = 0;
    double infer_total = 0.0, disc_total = 0.0;
    std::ostringstream csv;
    csv << "id,class,duration_seconds,clips,predicted_class,kl,discontinuity,num_inferences\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        const ManifestRow& row = *rows[static_cast<std::size_t>(i)];
        const ClipSet cg = segment_clips(gen_audio[static_cast<std::size_t>(i)], window, hop);
        const ClipSet cr = segment_clips(ref_audio[static_cast<std::size_t>(i)], window, hop);
        clips_g += static_cast<std::int64_t>(cg.clips.size());
        clips_r += static_cast<std::int64_t>(cr.clips.size());
        padded += cg.padded ? 1 : 0;
        eg.row(i) = embed_long_form(cg, embedder);
        er.row(i) = embed_long_form(cr, embedder);
        pg.row(i) = classify_long_form(cg, classifier);
        pr.row(i) = classify_long_form(cr, classifier);

        int inferences = 1;
        const Waveform& a = gen_audio[static_cast<std::size_t>(i)];
        std::vector<Eigen::Index> bounds =
            probe_boundaries(a.duration(), config.get_double("eval.probe_seconds"), a.rate);
        const path side = sidecar_path(opt.generated / row.wav_path);
        if (std::filesystem::exists(side)) {
            std::ifstream f(side);
            const auto j = nlohmann::json::parse(f, nullptr, false);
            if (j.is_discarded()) throw IoError("malformed provenance sidecar: " + side.string());
            inferences = j.value("num_inferences", 1);
            if (j.contains("boundaries")) bounds = j["boundaries"].get<std::vector<Eigen::Index>>();
        }
        const double disc = boundary_discontinuity(a, bounds);
        infer_total += inferences;
        disc_total += disc;
        Eigen::Index pred;
        pg.row(i).maxCoeff(&pred);
        csv << row.id << ',' << row.label << ',' << format_double(a.duration()) << ',' << cg.clips.size() << ','
            << pred << ',' << format_double(kl_divergence(pr.row(i), pg.row(i))) << ',' << format_double(disc)
            << ',' << inferences << '\n';
    }

    MetricReport report;
    report.add("config_hash", config.hash());
    report.add("audios", static_cast<std::int64_t>(n));
    report.add("window_seconds", window);
    report.add("hop_seconds", hop);
    report.add("clips_generated", clips_g);
    report.add("clips_reference", clips_r);
    report.add("clips_padded", padded);
    report.add("fad", fad(eg, er));
    report.add("is", inception_score(pg));
    report.add("is_reference", inception_score(pr));
    report.add("mkl", mkl(pg, pr));
    report.add("num_inferences", infer_total / static_cast<double>(n));
    report.add("discontinuity", disc_total / static_cast<double>(n));
    if (!opt.out.empty()) report.save(opt.out);
    if (opt.csv) {
        std::ofstream f(*opt.csv);
        if (!f) throw IoError("cannot write " + opt.csv->string());
        f << csv.str();
    }
    log << report.text();
    return report;
}

void compare_splits(const RunConfig& config, const CompareOptions& opt, std::ostream& log) {
    if (opt.splits.empty()) throw UsageError("--splits is empty");
    const LoadedModels m = load_models(config, opt.checkpoint, opt.vae, opt.raw_weights, log);
    const Corpus corpus = load_corpus(opt.data);
    std::filesystem::create_directories(opt.out_dir);
    const double fps = config.get_double("data.fps");
    const SamplerConfig base = config.sampler();

    std::ostringstream table;
    table << "split,fad,mkl,discontinuity,num_inferences,is\n";
    for (const auto& split : opt.splits) {
        const bool full = split == "full";
        double seconds = 0.0;
        if (!full) {
            try {
                seconds = std::stod(split);
            } catch (const std::exception&) {
                throw UsageError("--splits entries must be seconds or 'full', got '" + split + "'");
            }
        }
        const path dir = opt.out_dir / (full ? std::string("full") : "split_" + split);
        std::filesystem::create_directories(dir);
        const std::size_t count =
            opt.limit > 0 ? std::min<std::size_t>(corpus.rows.size(), static_cast<std::size_t>(opt.limit))
                          : corpus.rows.size();
        for (std::size_t i = 0; i < count; ++i) {
            const ManifestRow& row = corpus.rows[i];
            GenerationRequest req;
            req.fps = fps;
            req.duration_seconds = row.duration;
            req.condition = read_feature_file(corpus.dir / row.feat_path).topRows(frame_count(row.duration, fps));
            req.sampler = base;
            req.sampler.seed = derive_seed(base.seed, 0x5000u + i);
            const GenerationResult res =
                run_generation(req, m, full ? "full" : "split", seconds, Remainder::true_length);
            write_wav(dir / row.wav_path, res.audio, WavEncoding::float32);
            write_provenance(sidecar_path(dir / row.wav_path), req, res, config.hash());
        }
        log << "split " << split << ": generated " << count << " audios\n";
        std::ostringstream sink;
        const MetricReport r = evaluate(config, {dir, opt.data, dir / "report.txt", dir / "per_audio.csv"}, sink);
        auto value = [&](const std::string& key) {
            for (const auto& [k, v] : r.entries())
                if (k == key) return v;
            return std::string("nan");
        };
        table << split << ',' << value("fad") << ',' << value("mkl") << ',' << value("discontinuity") << ','
              << value("num_inferences") << ',' << value("is") << '\n';
    }
    const path csv = opt.out_dir / "compare_splits.csv";
    std::ofstream f(csv);
    if (!f) throw IoError("cannot write " + csv.string());
    f << table.str();
    log << table.str();
}

}  // namespace lova
