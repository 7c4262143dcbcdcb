#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vgd {

using TokenId = std::uint32_t;

/// Embedding from an image or text encoder. Stored as f32, the precision
/// encoders emit and the cache file persists.
class EmbeddingVector {
  public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}

    /// Divides by the L2 norm (computed in f64). Throws DegenerateEmbedding
    /// for an empty, zero or non-finite input.
    static EmbeddingVector normalized(std::span<const double> values);
    static EmbeddingVector normalized(std::span<const float> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    double norm() const;
    bool is_normalized(double tolerance = 1e-6) const;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

  private:
    std::vector<float> values_;
};

enum class Mode { Full, LlmOnly, ClipOnly };

std::string_view mode_name(Mode mode) noexcept;
/// Accepts "full", "llm_only"/"llm-only", "clip_only"/"clip-only".
Mode parse_mode(std::string_view name);

enum class TieBreak { LowestTokenId };

std::string_view tie_break_name(TieBreak tie_break) noexcept;
TieBreak parse_tie_break(std::string_view name);

/// A partial prompt under construction.
struct Hypothesis {
    std::vector<TokenId> lm_token_ids; // generated ids, including any init prefix
    std::string text;                  // detokenized lm_token_ids
    double lm_logprob_sum = 0.0;       // nats, never positive
    double align_score = 0.0;
    double combined_score = 0.0;
    bool terminated = false;
    std::uint32_t clip_token_count = 0;

    friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

enum class TargetKind { Image, ImageSet, Text };

std::string_view target_kind_name(TargetKind kind) noexcept;

/// What a prompt must align to. Constructed through the factories, which
/// enforce member count, shared dimension and unit norm.
class TargetSpec {
  public:
    static TargetSpec image(EmbeddingVector embedding);
    static TargetSpec image_set(std::vector<EmbeddingVector> embeddings);
    static TargetSpec text(EmbeddingVector embedding);

    TargetKind kind() const noexcept { return kind_; }
    std::span<const EmbeddingVector> embeddings() const noexcept { return embeddings_; }
    std::size_t dim() const noexcept { return embeddings_.front().dim(); }

  private:
    TargetSpec(TargetKind kind, std::vector<EmbeddingVector> embeddings);

    TargetKind kind_;
    std::vector<EmbeddingVector> embeddings_;
};

/// Hard cap of the alignment text encoder (77) minus its two special tokens.
inline constexpr std::uint32_t kMaxAlignTokens = 75;

struct DecodeConfig {
    std::uint32_t beam_width = 10;   // K
    std::uint32_t init_tokens = 1;   // M
    double alpha = 0.67;
    std::uint32_t max_clip_tokens = 32;
    double logit_scale = 100.0;
    Mode mode = Mode::Full;
    std::string template_id = "inversion";
    std::set<TokenId> banned_token_ids;
    TieBreak tie_break = TieBreak::LowestTokenId;
    std::int64_t seed = 0;

    /// Throws InvalidConfig describing the first violated constraint.
    void validate() const;
};

} // namespace vgd
