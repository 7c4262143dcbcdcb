#pragma once

#include "vgd/backends/scorer.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vgd {

/// Everything that defines a toy backend. Serialized as a single JSON file
/// (see README for the schema).
struct ToyConfig {
    std::string backend_id = "toy";
    std::string lm_name = "toy-bigram";
    std::string align_name = "toy-bag-of-rows";
    std::vector<std::string> vocab;
    std::optional<TokenId> unk_id;
    std::optional<TokenId> eos_id;
    std::vector<TokenId> banned_ids;
    // Exactly one of the two tables is set; rows are indexed by previous token.
    std::vector<std::vector<double>> bigram_logits;
    std::vector<std::vector<double>> bigram_probs;
    std::vector<std::vector<double>> embeddings; // |vocab| x dim
    std::vector<double> empty_text_embedding;    // defaults to the all-ones direction
    std::map<std::string, std::vector<double>> fixtures;
    double logit_scale = 100.0;
    std::uint32_t max_text_tokens = kMaxAlignTokens;
    std::size_t max_context = 4096;

    static ToyConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Deterministic LM + embedder for verification.
///
/// LM: bigram table over `vocab`, conditioned on the last context id.
/// Tokenizer: whitespace split; words outside the vocabulary map to unk_id.
/// Text embedding: normalized sum of the rows of the text's words
/// (order-insensitive); the empty text uses empty_text_embedding.
/// Images: the blob "fixture:<name>" resolves to a stored fixture vector.
class ToyBackend final : public LmScorer, public AlignScorer {
  public:
    explicit ToyBackend(ToyConfig config);

    static ToyBackend from_file(const std::filesystem::path& path);

    const ToyConfig& config() const noexcept { return config_; }

    /// Full next-token distribution after `prev` (log space, banned ids included).
    std::span<const double> row_logprobs(TokenId prev) const;
    double logprob(TokenId prev, TokenId next) const { return row_logprobs(prev)[next]; }

    // LmScorer
    std::string lm_name() const override { return config_.lm_name; }
    std::uint32_t vocab_size() const override {
        return static_cast<std::uint32_t>(config_.vocab.size());
    }
    std::vector<TokenId> tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const TokenId> ids) const override;
    std::vector<TokenLogprob> next_logprobs(std::span<const TokenId> context,
                                            std::uint32_t top_k) const override;
    std::vector<TokenId> banned_token_ids() const override { return lm_banned_; }
    std::optional<TokenId> eos_token_id() const override { return config_.eos_id; }
    ChatFormat chat_format() const override { return {}; }

    // AlignScorer
    std::string align_name() const override { return config_.align_name; }
    std::string backend_id() const override { return config_.backend_id; }
    std::size_t dim() const override { return dim_; }
    double logit_scale() const override { return config_.logit_scale; }
    std::uint32_t max_text_tokens() const override { return config_.max_text_tokens; }
    std::vector<std::uint32_t> count_tokens(std::span<const std::string> texts) const override;
    std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) const override;
    EmbeddingVector embed_image(std::span<const std::byte> image) const override;
    std::vector<VocabEntry> vocabulary() const override;

  private:
    std::vector<std::string> words(std::string_view text) const;
    TokenId word_id(const std::string& word) const;
    EmbeddingVector embed_one(const std::string& text) const;

    ToyConfig config_;
    std::size_t dim_ = 0;
    std::vector<double> logprobs_; // |V| x |V|, row-major
    std::map<std::string, TokenId, std::less<>> index_;
    std::vector<TokenId> lm_banned_;
};

} // namespace vgd
