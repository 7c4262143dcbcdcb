#pragma once

#include "vgd/backends/scorer.hpp"
#include "vgd/backends/vocab_cache.hpp"

#include <memory>
#include <string_view>

namespace vgd {

/// An LM scorer and an alignment scorer used together by one decode.
/// Cheap to copy; copies share the scorers and the vocabulary cache.
class ScorerSession {
  public:
    ScorerSession(std::shared_ptr<const LmScorer> lm, std::shared_ptr<const AlignScorer> align);

    /// "toy:<config.json>" or "gateway:<http://host:port>".
    static ScorerSession open(std::string_view backend_spec);

    const LmScorer& lm() const noexcept { return *lm_; }
    const AlignScorer& align() const noexcept { return *align_; }

    /// Uses a prebuilt cache (e.g. loaded from disk). Texts are attached from
    /// the alignment vocabulary if missing. Throws Dimension on a dim mismatch.
    void set_vocab_cache(VocabCache cache);

    /// The cache, built from align().vocabulary() on first use.
    const VocabCache& vocab_cache() const;

  private:
    struct CacheSlot;

    std::shared_ptr<const LmScorer> lm_;
    std::shared_ptr<const AlignScorer> align_;
    std::shared_ptr<CacheSlot> cache_;
};

} // namespace vgd
