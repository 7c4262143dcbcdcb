#pragma once

#include "vgd/types.hpp"

namespace vgd {

/// Log-space objective of one hypothesis:
///   full      -> align_score + alpha * lm_logprob_sum
///   llm_only  -> alpha * lm_logprob_sum
///   clip_only -> align_score
/// Throws InvalidScore on non-finite input, negative alpha, or a positive
/// log-prob sum.
double combined_score(double align_score, double lm_logprob_sum, double alpha,
                      Mode mode = Mode::Full);

/// scale * cos(text, image). Throws Dimension / DegenerateEmbedding.
double cosine_alignment(std::span<const float> text_emb, std::span<const float> image_emb,
                        double scale);
double cosine_alignment(const EmbeddingVector& text_emb, const EmbeddingVector& image_emb,
                        double scale);

/// Alignment against a target. For an image set this is the mean of the
/// per-member cosine alignments. The mean is accumulated as
/// first + sum(x_i - first) / n so that a set of identical members returns
/// exactly the single-member value.
double target_alignment(std::span<const float> text_emb, const TargetSpec& target, double scale);
double target_alignment(const EmbeddingVector& text_emb, const TargetSpec& target, double scale);

} // namespace vgd
