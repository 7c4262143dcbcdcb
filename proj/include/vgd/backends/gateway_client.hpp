#pragma once

#include "vgd/backends/scorer.hpp"

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vgd {

/// Contents of GET /v1/meta.
struct GatewayMeta {
    std::string lm_name;
    std::string align_name;
    std::uint32_t vocab_size = 0;
    std::size_t dim = 0;
    double logit_scale = 100.0;
    std::uint32_t max_text_tokens = kMaxAlignTokens;
    std::vector<TokenId> banned_token_ids;
    // Extension fields; absent on minimal gateways.
    std::optional<TokenId> eos_token_id;
    ChatFormat chat_format;

    static GatewayMeta from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct GatewayOptions {
    std::chrono::milliseconds connect_timeout{2000};
    std::chrono::milliseconds read_timeout{120000};
    /// Texts per embed_text / count_tokens request.
    std::size_t batch_size = 256;
};

/// Client for the scorer gateway (JSON over HTTP). Fetches /v1/meta on
/// construction; every call opens its own connection so the client can be
/// shared between threads.
///
/// HTTP 4xx/5xx bodies of the form {error_code, message} are rethrown as
/// vgd::Error with the matching code; connection failures raise Transport.
class GatewayBackend final : public LmScorer, public AlignScorer {
  public:
    explicit GatewayBackend(std::string base_url, GatewayOptions options = {});

    const GatewayMeta& meta() const noexcept { return meta_; }
    const std::string& base_url() const noexcept { return base_url_; }

    // LmScorer
    std::string lm_name() const override { return meta_.lm_name; }
    std::uint32_t vocab_size() const override { return meta_.vocab_size; }
    std::vector<TokenId> tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const TokenId> ids) const override;
    std::vector<TokenLogprob> next_logprobs(std::span<const TokenId> context,
                                            std::uint32_t top_k) const override;
    std::vector<TokenId> banned_token_ids() const override { return meta_.banned_token_ids; }
    std::optional<TokenId> eos_token_id() const override { return meta_.eos_token_id; }
    ChatFormat chat_format() const override { return meta_.chat_format; }

    // AlignScorer
    std::string align_name() const override { return meta_.align_name; }
    std::string backend_id() const override;
    std::size_t dim() const override { return meta_.dim; }
    double logit_scale() const override { return meta_.logit_scale; }
    std::uint32_t max_text_tokens() const override { return meta_.max_text_tokens; }
    std::vector<std::uint32_t> count_tokens(std::span<const std::string> texts) const override;
    std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) const override;
    EmbeddingVector embed_image(std::span<const std::byte> image) const override;
    /// Every non-banned LM id detokenized on its own. Fetched once, then memoized.
    std::vector<VocabEntry> vocabulary() const override;

  private:
    nlohmann::json get(const std::string& path) const;
    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
    EmbeddingVector to_embedding(const nlohmann::json& values) const;

    std::string base_url_;
    GatewayOptions options_;
    GatewayMeta meta_;
    mutable std::once_flag vocab_once_;
    mutable std::vector<VocabEntry> vocab_;
};

} // namespace vgd
