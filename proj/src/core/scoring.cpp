#include "vgd/scoring.hpp"

#include "vgd/error.hpp"
#include "vgd/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace vgd {

double combined_score(double align_score, double lm_logprob_sum, double alpha, Mode mode) {
    if (!std::isfinite(align_score) || !std::isfinite(lm_logprob_sum) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::InvalidScore, "non-finite score input");
    }
    if (alpha < 0.0) throw Error(ErrorCode::InvalidScore, "alpha must be non-negative");
    if (lm_logprob_sum > 0.0) throw Error(ErrorCode::InvalidScore, "log-prob sum must be <= 0");
    switch (mode) {
    case Mode::LlmOnly: return alpha * lm_logprob_sum;
    case Mode::ClipOnly: return align_score;
    case Mode::Full: break;
    }
    return align_score + alpha * lm_logprob_sum;
}

double cosine_alignment(std::span<const float> text_emb, std::span<const float> image_emb,
                        double scale) {
    if (text_emb.size() != image_emb.size()) {
        throw Error(ErrorCode::Dimension, "embedding dimensions differ: " +
                                              std::to_string(text_emb.size()) + " vs " +
                                              std::to_string(image_emb.size()));
    }
    const double ss_text = simd::sum_squares(text_emb);
    const double ss_image = simd::sum_squares(image_emb);
    if (!(ss_text > 0.0) || !(ss_image > 0.0)) {
        throw Error(ErrorCode::DegenerateEmbedding, "zero-norm embedding");
    }
    const double cos = simd::dot(text_emb, image_emb) / (std::sqrt(ss_text) * std::sqrt(ss_image));
    return scale * std::clamp(cos, -1.0, 1.0);
}

double cosine_alignment(const EmbeddingVector& text_emb, const EmbeddingVector& image_emb,
                        double scale) {
    return cosine_alignment(text_emb.values(), image_emb.values(), scale);
}

double target_alignment(const EmbeddingVector& text_emb, const TargetSpec& target, double scale) {
    return target_alignment(text_emb.values(), target, scale);
}

double target_alignment(std::span<const float> text_emb, const TargetSpec& target, double scale) {
    const auto members = target.embeddings();
    if (members.empty()) throw Error(ErrorCode::InvalidTarget, "empty target");
    const double first = cosine_alignment(text_emb, members.front().values(), scale);
    if (target.kind() != TargetKind::ImageSet) return first;
    double shift = 0.0;
    for (std::size_t i = 1; i < members.size(); ++i) {
        shift += cosine_alignment(text_emb, members[i].values(), scale) - first;
    }
    return first + shift / static_cast<double>(members.size());
}

} // namespace vgd
