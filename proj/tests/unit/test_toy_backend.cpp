#include "toy_instances.hpp"

#include "vgd/backends/toy_backend.hpp"
#include "vgd/error.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace vgd;
using namespace vgd::testing;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Protocol;
}

// a, b, c with P(b|a)=0.9, P(c|a)=0.1.
ToyConfig abc_config() {
    ToyConfig c;
    c.vocab = {"a", "b", "c"};
    c.bigram_probs = {{0.0, 0.9, 0.1}, {0.5, 0.25, 0.25}, {0.2, 0.3, 0.5}};
    c.embeddings = {{1, 0}, {0, 1}, {1, 1}};
    c.fixtures["cat"] = {3.0, 4.0};
    return c;
}

} // namespace

TEST_SUITE("toy_backend") {

TEST_CASE("next_logprobs reads back the bigram table") {
    const ToyBackend toy(abc_config());
    const TokenId ctx[] = {0};
    const auto top = toy.next_logprobs(ctx, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].id == 1);
    CHECK(top[0].logprob == doctest::Approx(std::log(0.9)).epsilon(1e-12));
    CHECK(top[1].id == 2);
    CHECK(top[1].logprob == doctest::Approx(std::log(0.1)).epsilon(1e-12));
    CHECK(toy.next_logprobs(ctx, 1).size() == 1);
}

TEST_CASE("zero-probability entries are never offered") {
    const ToyBackend toy(abc_config());
    const TokenId ctx[] = {0};
    for (const auto& c : toy.next_logprobs(ctx, 3)) CHECK(c.id != 0);
    CHECK(std::isinf(toy.logprob(0, 0)));
}

TEST_CASE("3-token context follows the bigram chain") {
    const ToyBackend toy(abc_config());
    // Only the last token conditions the next one; the chain a b c has
    // log-prob ln 0.9 + ln 0.25 by hand.
    const TokenId ctx[] = {0, 1, 2};
    const auto top = toy.next_logprobs(ctx, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].id == 2);
    CHECK(top[0].logprob == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(top[1].id == 1);
    CHECK(top[2].id == 0);
    CHECK(toy.logprob(0, 1) + toy.logprob(1, 2) == doctest::Approx(std::log(0.9) + std::log(0.25)));
}

TEST_CASE("every row of a logit table normalizes") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 20; ++i) {
        const ToyBackend toy(random_toy_config(rng));
        for (TokenId prev = 0; prev < toy.vocab_size(); ++prev) {
            double sum = 0.0;
            for (double lp : toy.row_logprobs(prev)) sum += std::exp(lp);
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("ties are ordered by ascending id and banned ids are excluded") {
    ToyConfig c;
    c.vocab = {"<unk>", "x", "y", "z"};
    c.unk_id = 0;
    c.banned_ids = {3};
    c.bigram_logits.assign(4, {5.0, 1.0, 1.0, 9.0});
    c.embeddings.assign(4, {1.0, 0.0});
    const ToyBackend toy(c);
    const TokenId ctx[] = {1};
    const auto top = toy.next_logprobs(ctx, 4);
    REQUIRE(top.size() == 2);
    CHECK(top[0].id == 1);
    CHECK(top[1].id == 2);
    CHECK(toy.banned_token_ids() == std::vector<TokenId>{0, 3});
    const auto vocab = toy.vocabulary();
    REQUIRE(vocab.size() == 2);
    CHECK(vocab[0] == VocabEntry{1, "x"});
}

TEST_CASE("next_logprobs errors") {
    auto cfg = abc_config();
    cfg.max_context = 4;
    const ToyBackend toy(cfg);
    const TokenId ctx[] = {0};
    const TokenId long_ctx[] = {0, 1, 2, 0, 1};
    CHECK(code_of([&] { toy.next_logprobs(ctx, 0); }) == ErrorCode::InvalidInput);
    CHECK(code_of([&] { toy.next_logprobs({}, 1); }) == ErrorCode::InvalidInput);
    CHECK(code_of([&] { toy.next_logprobs(long_ctx, 1); }) == ErrorCode::ContextLength);
}

TEST_CASE("embed_text follows the bag-of-rows rule") {
    const ToyBackend toy(sun_config());
    const std::vector<std::string> texts = {"sun", "moon sea", "sea moon", ""};
    const auto e = toy.embed_text(texts);
    REQUIRE(e.size() == 4);
    CHECK(e[0] == EmbeddingVector({1.0f, 0.0f, 0.0f, 0.0f}));
    // moon (0.6, 0.8, 0, 0) + sea (0, 0, 1, 0) = (0.6, 0.8, 1, 0), norm sqrt(2).
    const double n = std::sqrt(2.0);
    CHECK(e[1].values()[0] == doctest::Approx(0.6 / n));
    CHECK(e[1].values()[1] == doctest::Approx(0.8 / n));
    CHECK(e[1].values()[2] == doctest::Approx(1.0 / n));
    CHECK(e[1].values()[3] == 0.0f);
    CHECK(e[1] == e[2]);
    // The empty text defaults to the all-ones direction.
    for (float x : e[3].values()) CHECK(x == doctest::Approx(0.5));
    for (const auto& v : e) CHECK(v.is_normalized());
}

TEST_CASE("batches preserve order") {
    const ToyBackend toy(sun_config());
    const std::vector<std::string> batch = {"tree", "sun", "sea"};
    const auto e = toy.embed_text(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::string one[] = {batch[i]};
        CHECK(e[i] == toy.embed_text(one)[0]);
    }
}

TEST_CASE("over-length text is rejected with its index") {
    auto cfg = sun_config();
    cfg.max_text_tokens = 3;
    const ToyBackend toy(cfg);
    const std::vector<std::string> texts = {"sun", "sun sun sun sun"};
    try {
        toy.embed_text(texts);
        FAIL("expected TokenBudget");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TokenBudget);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
    CHECK(toy.count_tokens(texts) == std::vector<std::uint32_t>{1, 4});
}

TEST_CASE("tokenizer") {
    const ToyBackend toy(sun_config());
    CHECK(toy.tokenize("sun  moon\nsea") == std::vector<TokenId>{1, 2, 3});
    CHECK(toy.tokenize("unknown words") == std::vector<TokenId>{0, 0});
    CHECK(toy.tokenize("").empty());
    const TokenId ids[] = {1, 7};
    CHECK(toy.detokenize(ids) == "sun tree");
    const ToyBackend strict(abc_config());
    CHECK(code_of([&] { strict.tokenize("a zebra"); }) == ErrorCode::InvalidInput);
}

TEST_CASE("fixture images") {
    const ToyBackend toy(abc_config());
    const auto cat = toy.embed_image(fixture_blob("cat"));
    CHECK(cat.values()[0] == doctest::Approx(0.6));
    CHECK(cat.values()[1] == doctest::Approx(0.8));
    CHECK(cat == toy.embed_image(fixture_blob("cat")));
    CHECK(code_of([&] { toy.embed_image(fixture_blob("dog")); }) == ErrorCode::Media);
    const std::byte png[] = {std::byte{0x89}, std::byte{'P'}, std::byte{'N'}, std::byte{'G'}};
    CHECK(code_of([&] { toy.embed_image(png); }) == ErrorCode::Media);
}

TEST_CASE("config validation") {
    auto bad = [](auto mutate) {
        auto c = abc_config();
        mutate(c);
        return code_of([&] { ToyBackend{c}; });
    };
    CHECK(bad([](ToyConfig& c) { c.vocab.push_back("two words"); }) == ErrorCode::InvalidConfig);
    CHECK(bad([](ToyConfig& c) { c.bigram_probs[0] = {0.5, 0.4, 0.0}; }) == ErrorCode::InvalidConfig);
    CHECK(bad([](ToyConfig& c) { c.bigram_logits = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}; }) == ErrorCode::InvalidConfig);
    CHECK(bad([](ToyConfig& c) { c.embeddings[1] = {1.0}; }) == ErrorCode::InvalidConfig);
    CHECK(bad([](ToyConfig& c) { c.unk_id = 9; }) == ErrorCode::InvalidConfig);
    CHECK(bad([](ToyConfig& c) { c.vocab.assign(257, "w"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("two loads of one file behave identically") {
    std::mt19937_64 rng(29);
    const auto cfg = random_toy_config(rng, {.with_eos = true});
    const auto path = std::filesystem::temp_directory_path() / "vgd_toy_roundtrip.json";
    {
        std::ofstream out(path);
        out << cfg.to_json().dump(2);
    }
    const auto a = ToyBackend::from_file(path);
    const auto b = ToyBackend::from_file(path);
    std::filesystem::remove(path);
    for (TokenId prev = 0; prev < a.vocab_size(); ++prev) {
        const auto ra = a.row_logprobs(prev), rb = b.row_logprobs(prev);
        CHECK(std::equal(ra.begin(), ra.end(), rb.begin(), rb.end()));
    }
    const std::vector<std::string> texts = {a.vocabulary().front().text, ""};
    CHECK(a.embed_text(texts) == b.embed_text(texts));
    CHECK(a.eos_token_id() == b.eos_token_id());
    CHECK(code_of([] { ToyBackend::from_file("/nonexistent/toy.json"); }) == ErrorCode::Io);
}

} // TEST_SUITE
