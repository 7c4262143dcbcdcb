#include "vgd/engine/beam_search.hpp"

#include "vgd/error.hpp"
#include "vgd/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vgd {
namespace {

Hypothesis retired(const Hypothesis& h) {
    Hypothesis out = h;
    out.terminated = true;
    return out;
}

std::optional<double> finite_or_none(double v) {
    return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
}

} // namespace

bool ranks_before(const Hypothesis& a, const Hypothesis& b) noexcept {
    if (a.combined_score != b.combined_score) return a.combined_score > b.combined_score;
    const bool a_empty = a.lm_token_ids.empty();
    const bool b_empty = b.lm_token_ids.empty();
    if (a_empty != b_empty) return a_empty;
    if (!a_empty && a.lm_token_ids.back() != b.lm_token_ids.back()) {
        return a.lm_token_ids.back() < b.lm_token_ids.back();
    }
    return a.lm_token_ids < b.lm_token_ids;
}

Hypothesis init_beams(const TargetSpec& target, const VocabCache& cache, const LmScorer& lm,
                      const AlignScorer& align, const DecodeConfig& config) {
    // LM-only decoding must not consult the alignment model to pick a prefix.
    const std::size_t m = config.mode == Mode::LlmOnly ? 0 : config.init_tokens;
    Hypothesis h;
    if (m > 0) {
        if (cache.dim() != target.dim()) {
            throw Error(ErrorCode::Dimension, "vocab cache dim " + std::to_string(cache.dim()) +
                                                  " does not match target dim " +
                                                  std::to_string(target.dim()));
        }
        if (!cache.has_texts()) throw Error(ErrorCode::NotFound, "vocab cache has no token texts attached");
        std::string joined;
        for (std::size_t idx : cache.top_m(target, m, config.logit_scale)) {
            if (!joined.empty()) joined += ' ';
            joined += cache.text(idx);
        }
        h.lm_token_ids = lm.tokenize(joined);
        if (!h.lm_token_ids.empty()) h.text = lm.detokenize(h.lm_token_ids);
    }
    const std::string texts[] = {h.text};
    h.clip_token_count = align.count_tokens(texts).at(0);
    const auto emb = align.embed_text(texts).at(0);
    h.align_score = target_alignment(emb, target, config.logit_scale);
    h.lm_logprob_sum = 0.0;
    h.combined_score = combined_score(h.align_score, h.lm_logprob_sum, config.alpha, config.mode);
    return h;
}

Expansion expand(const BeamState& state, std::span<const TokenId> context, const LmScorer& lm,
                 const AlignScorer& align, const DecodeConfig& config) {
    if (state.beams.empty()) throw Error(ErrorCode::InvalidInput, "expand: no live beams");
    const auto eos = lm.eos_token_id();
    const auto& extra_banned = config.banned_token_ids;
    const auto request = static_cast<std::uint32_t>(config.beam_width + extra_banned.size());

    Expansion out;
    std::vector<std::size_t> parent_of; // child index -> beam index
    std::vector<bool> retire(state.beams.size(), false);
    bool any_candidates = false;
    bool any_at_budget = false;

    std::vector<TokenId> ctx(context.begin(), context.end());
    for (std::size_t b = 0; b < state.beams.size(); ++b) {
        const auto& beam = state.beams[b];
        if (beam.clip_token_count >= config.max_clip_tokens) {
            retire[b] = true;
            any_at_budget = true;
            continue;
        }
        ctx.resize(context.size());
        ctx.insert(ctx.end(), beam.lm_token_ids.begin(), beam.lm_token_ids.end());
        auto cands = lm.next_logprobs(ctx, request);
        std::erase_if(cands, [&](const TokenLogprob& c) { return extra_banned.count(c.id) > 0; });
        if (cands.size() > config.beam_width) cands.resize(config.beam_width);
        if (cands.empty()) {
            retire[b] = true;
            continue;
        }
        any_candidates = true;

        std::set<std::string> seen_texts;
        for (const auto& cand : cands) {
            if (eos && cand.id == *eos) {
                retire[b] = true;
                continue;
            }
            if (!std::isfinite(cand.logprob) || cand.logprob > 0.0) {
                throw Error(ErrorCode::Protocol, "LM returned an invalid log-prob");
            }
            Hypothesis child;
            child.lm_token_ids = beam.lm_token_ids;
            child.lm_token_ids.push_back(cand.id);
            child.lm_logprob_sum = beam.lm_logprob_sum + cand.logprob;
            child.text = lm.detokenize(child.lm_token_ids);
            // Candidates arrive best-first, so the first of an aliased text
            // has the higher log-prob.
            if (!seen_texts.insert(child.text).second) continue;
            out.children.push_back(std::move(child));
            parent_of.push_back(b);
        }
    }
    if (!any_candidates && !any_at_budget) {
        throw Error(ErrorCode::ExpansionExhausted, "no beam received a usable next-token candidate");
    }

    if (!out.children.empty()) {
        std::vector<std::string> texts;
        texts.reserve(out.children.size());
        for (const auto& c : out.children) texts.push_back(c.text);
        const auto counts = align.count_tokens(texts);
        std::vector<Hypothesis> kept;
        kept.reserve(out.children.size());
        for (std::size_t i = 0; i < out.children.size(); ++i) {
            if (counts.at(i) > config.max_clip_tokens) {
                retire[parent_of[i]] = true;
                continue;
            }
            out.children[i].clip_token_count = counts[i];
            kept.push_back(std::move(out.children[i]));
        }
        out.children = std::move(kept);
    }
    for (std::size_t b = 0; b < state.beams.size(); ++b) {
        if (retire[b]) out.terminated.push_back(retired(state.beams[b]));
    }
    return out;
}

std::vector<Hypothesis> prune(std::vector<Hypothesis> candidates, const AlignScorer& align,
                              const TargetSpec& target, const DecodeConfig& config) {
    if (candidates.empty()) throw Error(ErrorCode::InvalidInput, "prune: no candidates");
    std::vector<std::string> texts;
    texts.reserve(candidates.size());
    for (const auto& c : candidates) texts.push_back(c.text);
    std::vector<EmbeddingVector> embs;
    try {
        embs = align.embed_text(texts);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("scoring candidates: ") + e.what());
    }
    if (embs.size() != candidates.size()) {
        throw Error(ErrorCode::Protocol, "embed_text returned the wrong number of embeddings");
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto& c = candidates[i];
        c.align_score = target_alignment(embs[i], target, config.logit_scale);
        c.combined_score = combined_score(c.align_score, c.lm_logprob_sum, config.alpha, config.mode);
    }
    const std::size_t k = std::min<std::size_t>(config.beam_width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end(), ranks_before);
    candidates.resize(k);
    return candidates;
}

DecodeResult decode(const TargetSpec& target, const ScorerSession& session,
                    const DecodeConfig& config, const DecodeOptions& options) {
    config.validate();
    const auto& lm = session.lm();
    const auto& align = session.align();
    if (target.dim() != align.dim()) {
        throw Error(ErrorCode::Dimension, "target dim " + std::to_string(target.dim()) +
                                              " does not match alignment dim " +
                                              std::to_string(align.dim()));
    }

    const auto& registry = options.templates ? *options.templates : TemplateRegistry::builtins();
    Bindings bindings = options.bindings;
    bindings.try_emplace("max_length", std::to_string(config.max_clip_tokens));
    const auto context = render_context(registry, config.template_id, bindings, lm.chat_format(), lm);

    const bool needs_cache = config.mode != Mode::LlmOnly && config.init_tokens > 0;
    const VocabCache no_cache;
    const Hypothesis init =
        init_beams(target, needs_cache ? session.vocab_cache() : no_cache, lm, align, config);

    DecodeResult result;
    auto& trace = result.trace;
    trace.header = {config.alpha,           config.mode,         config.logit_scale,
                    config.beam_width,      config.init_tokens,  config.max_clip_tokens,
                    config.template_id,     config.seed,         target.kind()};

    BeamState state;
    state.beams = {init};
    // An empty prefix is not a prompt; it never competes for the result.
    if (!init.lm_token_ids.empty()) state.best_score_so_far = init.combined_score;
    {
        StepRecord rec;
        rec.survivors = state.beams;
        rec.best_score = finite_or_none(state.best_score_so_far);
        trace.steps.push_back(std::move(rec));
    }

    for (std::uint32_t step = 1;; ++step) {
        StepRecord rec;
        rec.step = step;
        rec.best_score = finite_or_none(state.best_score_so_far);

        const bool all_at_budget = std::all_of(state.beams.begin(), state.beams.end(), [&](const Hypothesis& h) {
            return h.clip_token_count >= config.max_clip_tokens;
        });
        if (all_at_budget) {
            for (const auto& b : state.beams) rec.terminated.push_back(retired(b));
            state.terminated_pool.insert(state.terminated_pool.end(), rec.terminated.begin(), rec.terminated.end());
            state.beams.clear();
            rec.termination = TerminationReason::BudgetExhausted;
            result.termination = *rec.termination;
            trace.steps.push_back(std::move(rec));
            break;
        }

        Expansion ex;
        try {
            ex = expand(state, context, lm, align, config);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ExpansionExhausted) throw;
            if (step == 1) throw Error(ErrorCode::EmptySearch, std::string("empty search: ") + e.what());
            rec.termination = TerminationReason::Exhausted;
            result.termination = *rec.termination;
            trace.steps.push_back(std::move(rec));
            break;
        }
        rec.terminated = ex.terminated;
        state.terminated_pool.insert(state.terminated_pool.end(), ex.terminated.begin(), ex.terminated.end());

        if (ex.children.empty()) {
            state.beams.clear();
            rec.termination = TerminationReason::AllTerminated;
            result.termination = *rec.termination;
            trace.steps.push_back(std::move(rec));
            break;
        }

        rec.expanded = ex.children.size();
        auto survivors = prune(std::move(ex.children), align, target, config);
        rec.survivors = survivors;
        rec.best_expanded = survivors.front().combined_score;
        // Exact comparison; a tie is not an improvement.
        if (!(*rec.best_expanded > state.best_score_so_far)) {
            rec.termination = TerminationReason::NoImprovement;
            result.termination = *rec.termination;
            trace.steps.push_back(std::move(rec));
            break;
        }
        state.beams = std::move(survivors);
        state.best_score_so_far = *rec.best_expanded;
        state.step = step;
        rec.best_score = state.best_score_so_far;
        trace.steps.push_back(std::move(rec));
    }

    const Hypothesis* best = nullptr;
    auto consider = [&](const Hypothesis& h) {
        if (h.lm_token_ids.empty()) return;
        if (!best || ranks_before(h, *best)) best = &h;
    };
    for (const auto& h : state.beams) consider(h);
    for (const auto& h : state.terminated_pool) consider(h);
    result.best = best ? *best : init;
    trace.result = result.best;
    return result;
}

} // namespace vgd
