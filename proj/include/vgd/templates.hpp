#pragma once

#include "vgd/backends/scorer.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vgd {

/// Task prompt texts. Placeholders use the `${name}` form; `${model.max_length}`
/// is an alias of `${max_length}`.
struct PromptTemplate {
    std::string id;
    std::string system_text;
    std::string user_text;
    std::string model_preamble;

    friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes every `${name}`. Throws Template for an unbound or unterminated
/// placeholder.
std::string render_text(std::string_view text, const Bindings& bindings);

class TemplateRegistry {
  public:
    /// inversion, style, distill, captioner.
    static const TemplateRegistry& builtins();

    /// Built-ins overridden/extended by a JSON file:
    ///   {"templates": [{"id": "...", "system": "...", "user": "...", "preamble": "..."}]}
    /// Missing text fields inherit from the built-in of the same id (or are empty).
    static TemplateRegistry from_file(const std::filesystem::path& path);
    static TemplateRegistry from_json(const nlohmann::json& j);

    void put(PromptTemplate t);
    /// Throws NotFound.
    const PromptTemplate& get(std::string_view id) const;
    std::vector<std::string> ids() const;

  private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

/// The chat string fed to the LM: role markers from `format` wrapped around
/// the rendered system prompt (omitted when empty), user prompt and preamble.
/// Generated tokens continue directly after the returned text.
std::string render_chat(const PromptTemplate& tmpl, const Bindings& bindings, const ChatFormat& format);

/// Tokenized render_chat().
std::vector<TokenId> render_context(const TemplateRegistry& registry, std::string_view template_id,
                                    const Bindings& bindings, const ChatFormat& format,
                                    const LmScorer& tokenizer);

} // namespace vgd
