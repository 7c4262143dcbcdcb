#pragma once

#include "vgd/backends/scorer.hpp"
#include "vgd/backends/session.hpp"
#include "vgd/backends/vocab_cache.hpp"
#include "vgd/engine/trace.hpp"
#include "vgd/templates.hpp"
#include "vgd/types.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace vgd {

struct BeamState {
    std::uint32_t step = 0;
    std::vector<Hypothesis> beams; // at most K, best first
    std::vector<Hypothesis> terminated_pool;
    double best_score_so_far = -std::numeric_limits<double>::infinity();
};

/// Strict ranking used everywhere hypotheses are ordered: higher combined
/// score first, then lower last-token id, then lexicographically smaller id
/// sequence.
bool ranks_before(const Hypothesis& a, const Hypothesis& b) noexcept;

/// Seeds the search with the `init_tokens` vocabulary entries most aligned to
/// the target, space-joined in descending score order and re-tokenized with
/// the LM tokenizer. The prefix is scored for alignment but carries zero LM
/// log-prob. With init_tokens == 0 the prefix is empty.
Hypothesis init_beams(const TargetSpec& target, const VocabCache& cache, const LmScorer& lm,
                      const AlignScorer& align, const DecodeConfig& config);

struct Expansion {
    std::vector<Hypothesis> children;   // unscored, within budget
    std::vector<Hypothesis> terminated; // parents that hit EOS or the budget
};

/// Appends each beam's K most probable next tokens. EOS children and
/// children over max_clip_tokens retire their parent to `terminated`;
/// children of one parent that detokenize identically are collapsed.
/// Throws ExpansionExhausted when no beam receives any usable candidate.
Expansion expand(const BeamState& state, std::span<const TokenId> context, const LmScorer& lm,
                 const AlignScorer& align, const DecodeConfig& config);

/// Embeds every candidate, fills align/combined scores and returns the best
/// K under ranks_before().
std::vector<Hypothesis> prune(std::vector<Hypothesis> candidates, const AlignScorer& align,
                              const TargetSpec& target, const DecodeConfig& config);

struct DecodeResult {
    Hypothesis best;
    TerminationReason termination = TerminationReason::NoImprovement;
    DecodeTrace trace;

    const std::string& prompt() const noexcept { return best.text; }
    double score() const noexcept { return best.combined_score; }
    std::uint32_t steps() const noexcept {
        return trace.steps.empty() ? 0 : trace.steps.back().step;
    }
};

struct DecodeOptions {
    const TemplateRegistry* templates = nullptr; // defaults to the built-ins
    Bindings bindings;                           // max_length is bound automatically
};

/// Full search: initialize, then expand and prune until the best expanded
/// score stops improving, every beam terminates, or the token budget is
/// spent. Returns the best non-empty hypothesis seen among live beams and
/// the terminated pool. Throws EmptySearch if the first expansion yields
/// nothing.
DecodeResult decode(const TargetSpec& target, const ScorerSession& session,
                    const DecodeConfig& config, const DecodeOptions& options = {});

} // namespace vgd
