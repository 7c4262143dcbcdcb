#pragma once

#include "vgd/backends/scorer.hpp"
#include "vgd/types.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vgd {

/// Precomputed alignment embeddings for every single-token vocabulary string.
///
/// File layout (little-endian):
///   "VGDC" | u32 version=1 | u32 vocab_size | u32 dim
///   | u32 backend_id_len | backend_id bytes (UTF-8)
///   | vocab_size x (u32 token_id | f32 x dim)
///
/// Token strings are not stored; attach_texts() restores them from the
/// backend vocabulary after loading.
class VocabCache {
  public:
    static constexpr std::uint32_t kVersion = 1;

    VocabCache() = default;
    VocabCache(std::string backend_id, std::size_t dim, std::vector<TokenId> ids,
               std::vector<float> rows);

    /// Embeds every entry with `align` in batches. Throws InvalidInput for an
    /// empty vocabulary.
    static VocabCache build(const AlignScorer& align, std::span<const VocabEntry> vocab,
                            std::size_t batch_size = 256);

    std::vector<std::byte> serialize() const;
    static VocabCache deserialize(std::span<const std::byte> bytes);

    /// Throws Io on failure.
    void save(const std::filesystem::path& path) const;
    static VocabCache load(const std::filesystem::path& path);

    /// Maps stored token ids to strings. Throws NotFound if an id is missing
    /// from `vocab`.
    void attach_texts(std::span<const VocabEntry> vocab);
    bool has_texts() const noexcept { return texts_.size() == ids_.size(); }

    const std::string& backend_id() const noexcept { return backend_id_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    std::span<const TokenId> ids() const noexcept { return ids_; }
    std::span<const float> rows() const noexcept { return rows_; }
    std::span<const float> row(std::size_t i) const { return {rows_.data() + i * dim_, dim_}; }
    const std::string& text(std::size_t i) const { return texts_.at(i); }

    /// Row indices of the m entries with the highest target_alignment,
    /// best first; equal scores keep the lower token id first.
    std::vector<std::size_t> top_m(const TargetSpec& target, std::size_t m, double scale) const;

    friend bool operator==(const VocabCache& a, const VocabCache& b) {
        return a.backend_id_ == b.backend_id_ && a.dim_ == b.dim_ && a.ids_ == b.ids_ &&
               a.rows_ == b.rows_;
    }

  private:
    std::string backend_id_;
    std::size_t dim_ = 0;
    std::vector<TokenId> ids_;
    std::vector<float> rows_;
    std::vector<std::string> texts_;
};

} // namespace vgd
