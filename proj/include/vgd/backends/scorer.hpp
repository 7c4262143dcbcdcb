#pragma once

#include "vgd/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vgd {

struct TokenLogprob {
    TokenId id = 0;
    double logprob = 0.0;

    friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

/// Role markers wrapped around the system prompt, user prompt and model
/// preamble. Backend-specific; the default is plain newline-separated text.
struct ChatFormat {
    std::string system_prefix;
    std::string system_suffix = "\n";
    std::string user_prefix;
    std::string user_suffix = "\n";
    std::string assistant_prefix;

    friend bool operator==(const ChatFormat&, const ChatFormat&) = default;
};

/// Next-token distribution of a causal language model. Implementations are
/// immutable after construction and safe to call concurrently.
class LmScorer {
  public:
    virtual ~LmScorer() = default;

    virtual std::string lm_name() const = 0;
    virtual std::uint32_t vocab_size() const = 0;
    virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(std::span<const TokenId> ids) const = 0;

    /// The top_k most probable next tokens, sorted by descending log-prob
    /// (ties by ascending id), with the backend's banned ids removed.
    virtual std::vector<TokenLogprob> next_logprobs(std::span<const TokenId> context,
                                                    std::uint32_t top_k) const = 0;

    virtual std::vector<TokenId> banned_token_ids() const = 0;
    virtual std::optional<TokenId> eos_token_id() const = 0;
    virtual ChatFormat chat_format() const = 0;
};

/// One entry of the alignment vocabulary scanned during beam initialization.
struct VocabEntry {
    TokenId id = 0;
    std::string text;

    friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

/// Joint image/text embedder.
class AlignScorer {
  public:
    virtual ~AlignScorer() = default;

    virtual std::string align_name() const = 0;
    /// Identifies the embedding space; written into vocabulary cache files.
    virtual std::string backend_id() const = 0;
    virtual std::size_t dim() const = 0;
    virtual double logit_scale() const = 0;
    /// Content-token limit of the text encoder (excluding start/end markers).
    virtual std::uint32_t max_text_tokens() const = 0;

    virtual std::vector<std::uint32_t> count_tokens(std::span<const std::string> texts) const = 0;

    /// Unit-normalized embeddings, one per input in order. Over-length input
    /// is rejected with TokenBudget, never truncated.
    virtual std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) const = 0;

    virtual EmbeddingVector embed_image(std::span<const std::byte> image) const = 0;

    /// Single-token strings used to seed prompts.
    virtual std::vector<VocabEntry> vocabulary() const = 0;
};

} // namespace vgd
