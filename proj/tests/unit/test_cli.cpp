#include "toy_instances.hpp"

#include "vgd/backends/toy_backend.hpp"
#include "vgd/backends/vocab_cache.hpp"
#include "vgd/cli.hpp"
#include "vgd/engine/trace.hpp"
#include "vgd/tasks.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <unistd.h>

using namespace vgd;
using nlohmann::json;

namespace {

const std::string kFixtures = VGD_FIXTURE_DIR;
const std::string kToy = "toy:" + kFixtures + "/toy_sun.json";

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vgd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

json dry_run(std::vector<std::string> args) {
    args.push_back("--dry-run");
    args.push_back("--json");
    const auto r = run_cli(args);
    REQUIRE(r.code == cli::kExitOk);
    return json::parse(r.out);
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("vgd_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& contents = "") const {
        const auto p = path / name;
        if (!contents.empty()) std::ofstream(p) << contents;
        return p.string();
    }
};

struct EnvGuard {
    explicit EnvGuard(const char* value) {
        if (value) {
            ::setenv("VGD_GATEWAY_URL", value, 1);
        } else {
            ::unsetenv("VGD_GATEWAY_URL");
        }
    }
    ~EnvGuard() { ::unsetenv("VGD_GATEWAY_URL"); }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("defaults") {
    EnvGuard env(nullptr);
    const auto j = dry_run({"--backend", kToy, "invert", "--image", "fixture:sun"});
    CHECK(j.at("command") == "invert");
    CHECK(j.at("beam") == 10);
    CHECK(j.at("alpha") == 0.67);
    CHECK(j.at("init_tokens") == 1);
    CHECK(j.at("tokens") == 32);
    CHECK(j.at("mode") == "full");
    CHECK(j.at("logit_scale") == "backend");
}

TEST_CASE("command line beats config file beats default") {
    EnvGuard env(nullptr);
    TempDir dir;
    const auto cfg = dir.file("vgd.toml", "beam = 4\nalpha = 0.25\ntokens = 12\n");

    const auto from_file = dry_run({"--config", cfg, "--backend", kToy, "invert", "--image", "x"});
    CHECK(from_file.at("beam") == 4);
    CHECK(from_file.at("alpha") == 0.25);
    CHECK(from_file.at("tokens") == 12);
    CHECK(from_file.at("init_tokens") == 1);

    const auto overridden =
        dry_run({"--config", cfg, "--backend", kToy, "--beam", "7", "invert", "--image", "x"});
    CHECK(overridden.at("beam") == 7);
    CHECK(overridden.at("alpha") == 0.25);
    CHECK(overridden.at("tokens") == 12);
}

TEST_CASE("plain dry run prints key = value lines") {
    EnvGuard env(nullptr);
    const auto r = run_cli({"--backend", kToy, "--beam", "3", "--dry-run", "fuse", "--prompts", "a", "b"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("beam = 3\n") != std::string::npos);
    CHECK(r.out.find("command = \"fuse\"\n") != std::string::npos);
}

TEST_CASE("gateway url from the environment") {
    EnvGuard env("http://127.0.0.1:9");
    const auto j = dry_run({"invert", "--image", "x"});
    CHECK(j.at("backend") == "gateway:http://127.0.0.1:9");
    const auto explicit_backend = dry_run({"--backend", kToy, "invert", "--image", "x"});
    CHECK(explicit_backend.at("backend") == kToy);
}

TEST_CASE("usage errors exit with 2") {
    EnvGuard env(nullptr);
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"--bogus", "invert", "--image", "x"}).code == cli::kExitUsage);
    CHECK(run_cli({"--backend", kToy, "--beam", "0", "invert", "--image", "x"}).code == cli::kExitUsage);
    CHECK(run_cli({"--backend", kToy, "--tokens", "76", "invert", "--image", "x"}).code == cli::kExitUsage);
    CHECK(run_cli({"--backend", kToy, "--mode", "fast", "invert", "--image", "x"}).code == cli::kExitUsage);
    CHECK(run_cli({"--backend", kToy, "invert"}).code == cli::kExitUsage);
    CHECK(run_cli({"--backend", kToy, "--init-tokens", "9", "--tokens", "4", "invert", "--image",
                   "fixture:sun"})
              .code == cli::kExitUsage);
    const auto no_backend = run_cli({"invert", "--image", "fixture:sun"});
    CHECK(no_backend.code == cli::kExitUsage);
    CHECK(no_backend.err.find("VGD_GATEWAY_URL") != std::string::npos);
}

TEST_CASE("runtime errors exit with 1") {
    EnvGuard env(nullptr);
    const auto media = run_cli({"--backend", kToy, "invert", "--image", "fixture:nowhere"});
    CHECK(media.code == cli::kExitRuntime);
    CHECK(media.err.find("media") != std::string::npos);
    CHECK(run_cli({"--backend", "toy:/nonexistent.json", "invert", "--image", "fixture:sun"}).code ==
          cli::kExitRuntime);
    CHECK(run_cli({"--backend", "gateway:http://127.0.0.1:9", "invert", "--image", "fixture:sun"}).code ==
          cli::kExitRuntime);
    CHECK(run_cli({"--backend", kToy, "distill", "--prompt", "sun moon", "--max-tokens", "2"}).code ==
          cli::kExitRuntime);
}

TEST_CASE("invert prints the prompt") {
    EnvGuard env(nullptr);
    const auto r = run_cli({"--backend", kToy, "--beam", "3", "--tokens", "4", "invert", "--image", "fixture:dusk"});
    REQUIRE(r.code == cli::kExitOk);

    auto session = ScorerSession::open(kToy);
    DecodeConfig c;
    c.beam_width = 3;
    c.max_clip_tokens = 4;
    const auto direct = invert(session, testing::fixture_blob("dusk"), c);
    CHECK(r.out == direct.prompt() + "\n");
}

TEST_CASE("json decode output") {
    EnvGuard env(nullptr);
    TempDir dir;
    const auto trace = dir.file("t.jsonl");
    const auto r = run_cli({"--backend", kToy, "--beam", "3", "--tokens", "4", "--json", "--trace", trace,
                            "invert", "--image", "fixture:beach"});
    REQUIRE(r.code == cli::kExitOk);
    const auto j = json::parse(r.out);
    for (const char* key : {"prompt", "score", "align", "lm_logprob", "steps", "clip_tokens", "termination"}) {
        CHECK_MESSAGE(j.contains(key), key);
    }
    CHECK(j.size() == 7);
    CHECK(j.at("prompt").is_string());
    CHECK(j.at("clip_tokens").get<int>() <= 4);
    CHECK(j.at("lm_logprob").get<double>() <= 0.0);

    const auto saved = DecodeTrace::load(trace);
    REQUIRE(saved.result);
    CHECK(saved.result->text == j.at("prompt"));
    CHECK(saved.result->combined_score == j.at("score").get<double>());
}

TEST_CASE("style and distill") {
    EnvGuard env(nullptr);
    const auto s = run_cli({"--backend", kToy, "--beam", "3", "--tokens", "3", "style", "--images", "fixture:sun",
                            "fixture:beach"});
    CHECK(s.code == cli::kExitOk);
    CHECK_FALSE(s.out.empty());
    CHECK(run_cli({"--backend", kToy, "style", "--images", "fixture:sun"}).code == cli::kExitRuntime);

    const auto d = run_cli({"--backend", kToy, "distill", "--prompt", "sun sun sun", "--max-tokens", "1"});
    CHECK(d.code == cli::kExitOk);
    CHECK(d.out == "sun\n");
}

TEST_CASE("fuse and score") {
    EnvGuard env(nullptr);
    const auto f = run_cli({"fuse", "--prompts", "red sun", "blue sea"});
    CHECK(f.code == cli::kExitOk);
    CHECK(f.out == "red sun, blue sea\n");
    CHECK(run_cli({"fuse", "--prompts", "alone"}).code == cli::kExitRuntime);

    const auto sc = run_cli({"--backend", kToy, "--json", "score", "--prompt", "sun", "--image", "fixture:sun"});
    REQUIRE(sc.code == cli::kExitOk);
    const auto j = json::parse(sc.out);
    CHECK(j.at("cosine").get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(j.at("scaled").get<double>() == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(j.at("token_count") == 1);

    const auto scaled = run_cli({"--backend", kToy, "--json", "--logit-scale", "10", "score", "--prompt", "sun",
                                 "--image", "fixture:sun"});
    CHECK(json::parse(scaled.out).at("scaled").get<double>() == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("cache build, inspect and use") {
    EnvGuard env(nullptr);
    TempDir dir;
    const auto out = dir.file("vocab.vgdc");
    const auto b = run_cli({"--backend", kToy, "--json", "cache", "build", "--out", out});
    REQUIRE(b.code == cli::kExitOk);
    CHECK(json::parse(b.out).at("entries") == 7);

    const auto i = run_cli({"--json", "cache", "inspect", out});
    REQUIRE(i.code == cli::kExitOk);
    const auto j = json::parse(i.out);
    CHECK(j.at("entries") == 7);
    CHECK(j.at("dim") == 4);
    CHECK(j.at("backend_id") == "toy-sun");
    CHECK(j.at("version") == VocabCache::kVersion);

    const auto vocab = dir.file("words.txt", "sun\nmoon\n\nnot-a-word here\n");
    const auto partial = dir.file("partial.vgdc");
    CHECK(run_cli({"--backend", kToy, "cache", "build", "--out", partial, "--vocab-file", vocab}).code ==
          cli::kExitOk);
    CHECK(VocabCache::load(partial).size() == 2);

    const auto with = run_cli({"--backend", kToy, "--cache", out, "--beam", "3", "--tokens", "3", "invert",
                               "--image", "fixture:sun"});
    const auto without =
        run_cli({"--backend", kToy, "--beam", "3", "--tokens", "3", "invert", "--image", "fixture:sun"});
    CHECK(with.code == cli::kExitOk);
    CHECK(with.out == without.out);

    CHECK(run_cli({"cache", "inspect", dir.file("missing.vgdc")}).code == cli::kExitRuntime);
}

TEST_CASE("trace replay") {
    EnvGuard env(nullptr);
    const auto golden = kFixtures + "/golden_trace.jsonl";
    const auto ok = run_cli({"trace", "replay", golden});
    CHECK(ok.code == cli::kExitOk);
    CHECK(ok.out.find(" ok\n") != std::string::npos);

    TempDir dir;
    auto trace = DecodeTrace::load(golden);
    REQUIRE(trace.steps.size() >= 2);
    REQUIRE_FALSE(trace.steps[1].survivors.empty());
    trace.steps[1].survivors[0].align_score += 1.0;
    const auto bad = dir.file("bad.jsonl");
    trace.save(bad);
    const auto r = run_cli({"--json", "trace", "replay", bad});
    CHECK(r.code == cli::kExitRuntime);
    CHECK(json::parse(r.out).at("ok") == false);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("help exits cleanly") {
    const auto r = run_cli({"--help"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("invert") != std::string::npos);
}

} // TEST_SUITE
