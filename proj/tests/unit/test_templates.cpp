#include "toy_instances.hpp"

#include "vgd/error.hpp"
#include "vgd/templates.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

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

const std::string kSystem =
    "You are a respectful and honest visual description generator for Stable Diffusion text prompt. "
    "Answer in 1 sentence and do not mention anything other than the prompt. Do not mention "
    "'description'.";
const std::string kPreamble =
    "Answer: Sure, here is a prompt for stable diffusion within ${model.max_length} tokens:";

} // namespace

TEST_SUITE("templates") {

TEST_CASE("built-in texts") {
    const auto& r = TemplateRegistry::builtins();
    CHECK(r.ids() == std::vector<std::string>{"captioner", "distill", "inversion", "style"});

    const auto& inv = r.get("inversion");
    CHECK(inv.system_text == kSystem);
    CHECK(inv.user_text ==
          "Please generate the diffusion prompt on the given condition containing the objects, people, "
          "background, and the style of the image:");
    CHECK(inv.model_preamble == kPreamble);

    const auto& style = r.get("style");
    CHECK(style.system_text == kSystem);
    CHECK(style.user_text ==
          "Please generate the diffusion prompt of the image style based on the given condition "
          "containing the painting style, color, and shapes of the image:");
    CHECK(style.model_preamble == kPreamble);

    const auto& distill = r.get("distill");
    CHECK(distill.system_text == kSystem);
    CHECK(distill.user_text ==
          "Please generate the diffusion prompt within ${max_length} tokens so that you can generate "
          "same images with a given prompt: ${target_prompt}");
    CHECK(distill.model_preamble == kPreamble);

    const auto& cap = r.get("captioner");
    CHECK(cap.system_text.empty());
    CHECK(cap.user_text == "Describe the scene in this image with one sentence.");
    CHECK(cap.model_preamble.empty());
}

TEST_CASE("distill renders its budget") {
    const auto& t = TemplateRegistry::builtins().get("distill");
    const Bindings b{{"max_length", "16"}, {"target_prompt", "a red fox in snow"}};
    const auto text = render_chat(t, b, ChatFormat{});
    CHECK(text.find("within 16 tokens") != std::string::npos);
    CHECK(text.find("a red fox in snow") != std::string::npos);
    CHECK(text.find("${") == std::string::npos);
    CHECK(text.find('}') == std::string::npos);
}

TEST_CASE("model.max_length aliases max_length") {
    CHECK(render_text("${model.max_length}/${max_length}", {{"max_length", "8"}}) == "8/8");
}

TEST_CASE("plain chat format is newline-separated text ending at the preamble") {
    const auto& t = TemplateRegistry::builtins().get("inversion");
    const auto text = render_chat(t, {{"max_length", "32"}}, ChatFormat{});
    CHECK(text == kSystem + "\n" + t.user_text + "\n" +
                      "Answer: Sure, here is a prompt for stable diffusion within 32 tokens:");
}

TEST_CASE("role markers wrap each part and an empty system prompt is omitted") {
    const ChatFormat f{"<s>", "</s>", "[U]", "[/U]", "[A]"};
    const PromptTemplate t{"t", "", "hi ${x}", "ok"};
    CHECK(render_chat(t, {{"x", "there"}}, f) == "[U]hi there[/U][A]ok");
    const PromptTemplate s{"t", "sys", "u", "p"};
    CHECK(render_chat(s, {}, f) == "<s>sys</s>[U]u[/U][A]p");
}

TEST_CASE("toy context equals tokenizing the concatenation") {
    const ToyBackend toy(sun_config());
    const auto& r = TemplateRegistry::builtins();
    const Bindings b{{"max_length", "32"}};
    const auto ids = render_context(r, "inversion", b, toy.chat_format(), toy);
    const auto& t = r.get("inversion");
    const std::string concat = kSystem + "\n" + t.user_text + "\n" +
                               "Answer: Sure, here is a prompt for stable diffusion within 32 tokens:";
    CHECK(ids == toy.tokenize(concat));
    CHECK(ids == render_context(r, "inversion", b, toy.chat_format(), toy));
    CHECK(!ids.empty());
}

TEST_CASE("errors") {
    const ToyBackend toy(sun_config());
    CHECK(code_of([] { render_text("${missing}", {}); }) == ErrorCode::Template);
    CHECK(code_of([] { render_text("${open", {}); }) == ErrorCode::Template);
    CHECK(code_of([] { TemplateRegistry::builtins().get("haiku"); }) == ErrorCode::NotFound);
    CHECK(code_of([&] {
              render_context(TemplateRegistry::builtins(), "distill", {{"max_length", "4"}}, {}, toy);
          }) == ErrorCode::Template);
    CHECK(render_text("no placeholders {here}", {}) == "no placeholders {here}");
}

TEST_CASE("file overrides and extends the built-ins") {
    const auto path = std::filesystem::temp_directory_path() / "vgd_templates.json";
    {
        std::ofstream out(path);
        out << R"({"templates": [
            {"id": "inversion", "user": "Describe ${subject}:"},
            {"id": "haiku", "system": "", "user": "Write a haiku.", "preamble": "Haiku:"}
        ]})";
    }
    const auto r = TemplateRegistry::from_file(path);
    std::filesystem::remove(path);
    CHECK(r.get("inversion").user_text == "Describe ${subject}:");
    CHECK(r.get("inversion").system_text == kSystem);
    CHECK(r.get("haiku").model_preamble == "Haiku:");
    CHECK(r.get("style") == TemplateRegistry::builtins().get("style"));

    CHECK(code_of([] { TemplateRegistry::from_json(nlohmann::json{{"templates", {{{"user", "x"}}}}}); }) ==
          ErrorCode::Template);
    CHECK(code_of([] { TemplateRegistry::from_file("/nonexistent/t.json"); }) == ErrorCode::Io);
}

} // TEST_SUITE
