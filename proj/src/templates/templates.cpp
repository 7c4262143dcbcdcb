#include "vgd/templates.hpp"

#include "vgd/error.hpp"

#include <fstream>

namespace vgd {
namespace {

constexpr std::string_view kSystem =
    "You are a respectful and honest visual description generator for Stable Diffusion text "
    "prompt. Answer in 1 sentence and do not mention anything other than the prompt. Do not "
    "mention 'description'.";

constexpr std::string_view kPreamble =
    "Answer: Sure, here is a prompt for stable diffusion within ${model.max_length} tokens:";

TemplateRegistry make_builtins() {
    TemplateRegistry r;
    r.put({"inversion", std::string(kSystem),
           "Please generate the diffusion prompt on the given condition containing the objects, "
           "people, background, and the style of the image:",
           std::string(kPreamble)});
    r.put({"style", std::string(kSystem),
           "Please generate the diffusion prompt of the image style based on the given condition "
           "containing the painting style, color, and shapes of the image:",
           std::string(kPreamble)});
    r.put({"distill", std::string(kSystem),
           "Please generate the diffusion prompt within ${max_length} tokens so that you can "
           "generate same images with a given prompt: ${target_prompt}",
           std::string(kPreamble)});
    r.put({"captioner", "", "Describe the scene in this image with one sentence.", ""});
    return r;
}

std::string_view canonical_name(std::string_view name) {
    return name == "model.max_length" ? std::string_view("max_length") : name;
}

} // namespace

std::string render_text(std::string_view text, const Bindings& bindings) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find("${", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        const auto close = text.find('}', open + 2);
        if (close == std::string_view::npos) {
            throw Error(ErrorCode::Template, "unterminated placeholder in template text");
        }
        const auto name = canonical_name(text.substr(open + 2, close - open - 2));
        const auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw Error(ErrorCode::Template, "unbound placeholder ${" + std::string(name) + "}");
        }
        out.append(it->second);
        pos = close + 1;
    }
    return out;
}

const TemplateRegistry& TemplateRegistry::builtins() {
    static const TemplateRegistry registry = make_builtins();
    return registry;
}

TemplateRegistry TemplateRegistry::from_json(const nlohmann::json& j) {
    TemplateRegistry r = builtins();
    try {
        for (const auto& item : j.at("templates")) {
            PromptTemplate t;
            t.id = item.at("id").get<std::string>();
            if (auto it = r.templates_.find(t.id); it != r.templates_.end()) t = it->second;
            t.system_text = item.value("system", t.system_text);
            t.user_text = item.value("user", t.user_text);
            t.model_preamble = item.value("preamble", t.model_preamble);
            r.put(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Template, std::string("template file: ") + e.what());
    }
    return r;
}

TemplateRegistry TemplateRegistry::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open template file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Template, path.string() + ": " + e.what());
    }
    return from_json(j);
}

void TemplateRegistry::put(PromptTemplate t) {
    if (t.id.empty()) throw Error(ErrorCode::Template, "template id must not be empty");
    auto id = t.id;
    templates_.insert_or_assign(std::move(id), std::move(t));
}

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
    const auto it = templates_.find(id);
    if (it == templates_.end()) throw Error(ErrorCode::NotFound, "unknown template '" + std::string(id) + "'");
    return it->second;
}

std::vector<std::string> TemplateRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : templates_) out.push_back(id);
    return out;
}

std::string render_chat(const PromptTemplate& tmpl, const Bindings& bindings, const ChatFormat& format) {
    std::string out;
    const auto system = render_text(tmpl.system_text, bindings);
    if (!system.empty()) out += format.system_prefix + system + format.system_suffix;
    out += format.user_prefix + render_text(tmpl.user_text, bindings) + format.user_suffix;
    out += format.assistant_prefix + render_text(tmpl.model_preamble, bindings);
    return out;
}

std::vector<TokenId> render_context(const TemplateRegistry& registry, std::string_view template_id,
                                    const Bindings& bindings, const ChatFormat& format,
                                    const LmScorer& tokenizer) {
    return tokenizer.tokenize(render_chat(registry.get(template_id), bindings, format));
}

} // namespace vgd
