#include "vgd/types.hpp"

#include "vgd/error.hpp"
#include "vgd/simd/kernels.hpp"

#include <cmath>

namespace vgd {
namespace {

template <typename T>
EmbeddingVector normalize_impl(std::span<const T> values) {
    if (values.empty()) throw Error(ErrorCode::DegenerateEmbedding, "empty embedding");
    double ss = 0.0;
    for (T v : values) ss += static_cast<double>(v) * static_cast<double>(v);
    const double norm = std::sqrt(ss);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorCode::DegenerateEmbedding, "embedding has zero or non-finite norm");
    }
    std::vector<float> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(values[i]) / norm);
    }
    return EmbeddingVector(std::move(out));
}

} // namespace

EmbeddingVector EmbeddingVector::normalized(std::span<const double> values) {
    return normalize_impl(values);
}

EmbeddingVector EmbeddingVector::normalized(std::span<const float> values) {
    return normalize_impl(values);
}

double EmbeddingVector::norm() const { return std::sqrt(simd::sum_squares(values_)); }

bool EmbeddingVector::is_normalized(double tolerance) const {
    return !values_.empty() && std::abs(norm() - 1.0) <= tolerance;
}

std::string_view mode_name(Mode mode) noexcept {
    switch (mode) {
    case Mode::Full: return "full";
    case Mode::LlmOnly: return "llm_only";
    case Mode::ClipOnly: return "clip_only";
    }
    return "full";
}

Mode parse_mode(std::string_view name) {
    if (name == "full") return Mode::Full;
    if (name == "llm_only" || name == "llm-only") return Mode::LlmOnly;
    if (name == "clip_only" || name == "clip-only") return Mode::ClipOnly;
    throw Error(ErrorCode::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

std::string_view tie_break_name(TieBreak) noexcept { return "lowest_token_id"; }

TieBreak parse_tie_break(std::string_view name) {
    if (name == "lowest_token_id") return TieBreak::LowestTokenId;
    throw Error(ErrorCode::InvalidConfig, "unknown tie_break '" + std::string(name) + "'");
}

std::string_view target_kind_name(TargetKind kind) noexcept {
    switch (kind) {
    case TargetKind::Image: return "image";
    case TargetKind::ImageSet: return "image_set";
    case TargetKind::Text: return "text";
    }
    return "image";
}

TargetSpec::TargetSpec(TargetKind kind, std::vector<EmbeddingVector> embeddings)
    : kind_(kind), embeddings_(std::move(embeddings)) {
    if (embeddings_.empty()) throw Error(ErrorCode::InvalidTarget, "target has no embeddings");
    const std::size_t dim = embeddings_.front().dim();
    for (const auto& e : embeddings_) {
        if (e.dim() != dim) {
            throw Error(ErrorCode::Dimension, "target embeddings disagree on dimension");
        }
        if (!e.is_normalized()) {
            throw Error(ErrorCode::InvalidTarget, "target embeddings must be unit-normalized");
        }
    }
}

TargetSpec TargetSpec::image(EmbeddingVector embedding) {
    return TargetSpec(TargetKind::Image, {std::move(embedding)});
}

TargetSpec TargetSpec::image_set(std::vector<EmbeddingVector> embeddings) {
    if (embeddings.size() < 2) {
        throw Error(ErrorCode::InvalidTarget, "an image set needs at least 2 images");
    }
    return TargetSpec(TargetKind::ImageSet, std::move(embeddings));
}

TargetSpec TargetSpec::text(EmbeddingVector embedding) {
    return TargetSpec(TargetKind::Text, {std::move(embedding)});
}

void DecodeConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    if (beam_width < 1) fail("beam width must be at least 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be a finite non-negative number");
    if (max_clip_tokens < 1 || max_clip_tokens > kMaxAlignTokens) {
        fail("max_clip_tokens must be in [1, 75]");
    }
    if (init_tokens > max_clip_tokens) fail("init_tokens cannot exceed max_clip_tokens");
    if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) fail("logit_scale must be positive");
    if (template_id.empty()) fail("template_id must not be empty");
}

} // namespace vgd
