// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

#include "lova/app.hpp"
#include "lova/config.hpp"
#include "lova/errors.hpp"

using namespace lova;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "lova_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string bytes_of(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Runs the CLI with stderr captured to `log`; returns the exit status.
int run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(LOVA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTiny =
    " --set vae.hidden=8 --set vae.latent_dim=4 --set vae.steps=5 --set vae.batch=2"
    " --set model.token_dim=8 --set model.depth=1 --set model.heads=1"
    " --set pretrain.epochs=1 --set pretrain.batch=2 --set pretrain.warmup=1"
    " --set sampler.steps=4 --set eval.classifier_iters=20";

}  // namespace

TEST_CASE("config files, overrides and hashing") {
    const fs::path dir = scratch("config");
    std::ofstream(dir / "a.cfg") << "# comment\nmodel.depth = 2\n\nsampler.guidance=3.5  # trailing\n";
    RunConfig c = resolve_config(dir / "a.cfg", {"model.depth=3"});
    CHECK(c.get_int("model.depth") == 3);
    CHECK(c.get_double("sampler.guidance") == 3.5);
    CHECK(c.get("schedule.kind") == "cosine");

    const RunConfig same = resolve_config(dir / "a.cfg", {"model.depth=3"});
    CHECK(c.hash() == same.hash());
    CHECK(c.hash().size() == 16);
    CHECK(resolve_config(std::nullopt, {}).hash() != c.hash());
    CHECK(c.canonical_text().find("model.depth=3\n") != std::string::npos);

    CHECK_THROWS_AS(resolve_config(std::nullopt, {"model.dpeth=3"}), UsageError);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {"model.depth"}), UsageError);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {"model.depth=two"}), UsageError);
    std::ofstream(dir / "bad.cfg") << "model.depth = 2\nnot a pair\n";
    try {
        resolve_config(dir / "bad.cfg", {});
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
    }
    CHECK_THROWS_AS(resolve_config(dir / "missing.cfg", {}), IoError);
    CHECK_THROWS_AS(c.synthetic("holdout"), UsageError);
}

TEST_CASE("typed views of the config") {
    const RunConfig c = resolve_config(std::nullopt, {"vae.strides=4,2", "model.depth=2"});
    CHECK(c.vae().strides == std::vector<int>{4, 2});
    CHECK(c.dit(32, 11).depth == 2);
    CHECK(c.dit(32, 11).latent_dim == 32);
    CHECK(c.train(Phase::finetune).optimizer.lr == Catch::Approx(3e-5));
    CHECK(c.synthetic("pretrain").min_duration == 10.0);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {"vae.strides=4,x"}), UsageError);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {"vae.strides=4x"}), UsageError);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {"sampler.kind=euler"}), Error);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("codes");
    const fs::path log = dir / "log.txt";
    CHECK(run("", log) == 2);
    CHECK(run("frobnicate", log) == 2);
    CHECK(run("make-data", log) == 2);
    CHECK(run("make-data --out " + (dir / "x").string() + " --split holdout", log) == 2);
    CHECK(run("make-data --out " + (dir / "x").string() + " --set model.dpeth=1", log) == 2);
    CHECK(bytes_of(log).find("model.dpeth") != std::string::npos);
    CHECK(run("train-vae --data " + (dir / "absent").string() + " --out " + (dir / "v.ckpt").string(), log) == 4);
    CHECK(run("make-data --out " + (dir / "x").string() + " --config " + (dir / "none.cfg").string(), log) == 4);
    CHECK(run("--help", log) == 0);
}

TEST_CASE("subcommands are reproducible end to end") {
    const fs::path dir = scratch("e2e");
    const fs::path log = dir / "log.txt";
    const std::string d = dir.string();
    REQUIRE(run("make-data --count 2 --out " + d + "/data", log) == 0);
    REQUIRE(run("make-data --count 2 --out " + d + "/data2", log) == 0);
    CHECK(bytes_of(dir / "data/manifest.csv") == bytes_of(dir / "data2/manifest.csv"));
    CHECK(bytes_of(dir / "data/ex00001.wav") == bytes_of(dir / "data2/ex00001.wav"));

    REQUIRE(run(std::string("train-vae") + kTiny + " --data " + d + "/data --out " + d + "/vae.ckpt", log) == 0);
    REQUIRE(run(std::string("pretrain") + kTiny + " --data " + d + "/data --vae " + d + "/vae.ckpt --out " + d +
                    "/dit.ckpt --curve " + d + "/curve.csv",
                log) == 0);
    CHECK(bytes_of(dir / "curve.csv").rfind("step,phase,loss,lr\n", 0) == 0);

    const std::string gen = std::string("generate") + kTiny + " --checkpoint " + d + "/dit.ckpt --vae " + d +
                            "/vae.ckpt --data " + d + "/data --mode split --split-duration 4";
    fs::create_directories(dir / "gen_a");
    fs::create_directories(dir / "gen_b");
    for (const char* id : {"ex00000", "ex00001"})
        for (const char* sub : {"gen_a", "gen_b"})
            REQUIRE(run(gen + " --id " + id + " --out " + d + "/" + sub + "/" + id + ".wav", log) == 0);
    CHECK(bytes_of(dir / "gen_a/ex00000.wav") == bytes_of(dir / "gen_b/ex00000.wav"));
    CHECK(bytes_of(dir / "gen_a/ex00001.wav") == bytes_of(dir / "gen_b/ex00001.wav"));
    CHECK(bytes_of(dir / "gen_a/ex00000.json") == bytes_of(dir / "gen_b/ex00000.json"));
    CHECK(bytes_of(dir / "gen_a/ex00000.json").find("\"num_inferences\": 3") != std::string::npos);

    // A different seed changes the audio.
    REQUIRE(run(gen + " --id ex00000 --seed 99 --out " + d + "/seed99.wav", log) == 0);
    CHECK(bytes_of(dir / "seed99.wav") != bytes_of(dir / "gen_a/ex00000.wav"));

    const std::string ev = std::string("evaluate") + kTiny + " --reference " + d + "/data";
    REQUIRE(run(ev + " --generated " + d + "/gen_a --out " + d + "/ra.txt --csv " + d + "/ra.csv", log) == 0);
    REQUIRE(run(ev + " --generated " + d + "/gen_b --out " + d + "/rb.txt --csv " + d + "/rb.csv", log) == 0);
    CHECK(!bytes_of(dir / "ra.txt").empty());
    CHECK(bytes_of(dir / "ra.txt") == bytes_of(dir / "rb.txt"));
    CHECK(bytes_of(dir / "ra.csv") == bytes_of(dir / "rb.csv"));
    CHECK(bytes_of(dir / "ra.txt").find("discontinuity: ") != std::string::npos);
}
