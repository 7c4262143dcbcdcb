#include "vgd/backends/vocab_cache.hpp"

#include "vgd/error.hpp"
#include "vgd/scoring.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <numeric>
#include <unordered_map>

namespace vgd {
namespace {

constexpr char kMagic[4] = {'V', 'G', 'D', 'C'};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<std::byte>((v >> shift) & 0xFFu));
    }
}

class Reader {
  public:
    explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::span<const std::byte> take(std::size_t n) {
        need(n);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const noexcept { return pos_ == bytes_.size(); }

  private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw Error(ErrorCode::Io, "vocab cache: truncated file");
    }

    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

VocabCache::VocabCache(std::string backend_id, std::size_t dim, std::vector<TokenId> ids,
                       std::vector<float> rows)
    : backend_id_(std::move(backend_id)), dim_(dim), ids_(std::move(ids)), rows_(std::move(rows)) {
    if (rows_.size() != ids_.size() * dim_) {
        throw Error(ErrorCode::Dimension, "vocab cache: row data does not match ids x dim");
    }
}

VocabCache VocabCache::build(const AlignScorer& align, std::span<const VocabEntry> vocab,
                             std::size_t batch_size) {
    if (vocab.empty()) throw Error(ErrorCode::InvalidInput, "vocab cache: empty vocabulary");
    const std::size_t dim = align.dim();
    std::vector<TokenId> ids;
    std::vector<float> rows;
    ids.reserve(vocab.size());
    rows.reserve(vocab.size() * dim);
    batch_size = std::max<std::size_t>(batch_size, 1);
    for (std::size_t start = 0; start < vocab.size(); start += batch_size) {
        const auto chunk = vocab.subspan(start, std::min(batch_size, vocab.size() - start));
        std::vector<std::string> texts;
        texts.reserve(chunk.size());
        for (const auto& e : chunk) texts.push_back(e.text);
        const auto embs = align.embed_text(texts);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (embs[i].dim() != dim) throw Error(ErrorCode::Dimension, "vocab cache: embedding dim mismatch");
            ids.push_back(chunk[i].id);
            rows.insert(rows.end(), embs[i].values().begin(), embs[i].values().end());
        }
    }
    VocabCache cache(align.backend_id(), dim, std::move(ids), std::move(rows));
    cache.attach_texts(vocab);
    return cache;
}

std::vector<std::byte> VocabCache::serialize() const {
    std::vector<std::byte> out;
    out.reserve(20 + backend_id_.size() + ids_.size() * (4 + 4 * dim_));
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(ids_.size()));
    put_u32(out, static_cast<std::uint32_t>(dim_));
    put_u32(out, static_cast<std::uint32_t>(backend_id_.size()));
    for (char c : backend_id_) out.push_back(static_cast<std::byte>(c));
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        put_u32(out, ids_[r]);
        for (float v : row(r)) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

VocabCache VocabCache::deserialize(std::span<const std::byte> bytes) {
    Reader in(bytes);
    const auto magic = in.take(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic),
                    [](std::byte b, char c) { return b == static_cast<std::byte>(c); })) {
        throw Error(ErrorCode::Io, "vocab cache: bad magic");
    }
    const auto version = in.u32();
    if (version != kVersion) {
        throw Error(ErrorCode::Io, "vocab cache: unsupported version " + std::to_string(version));
    }
    const std::size_t count = in.u32();
    const std::size_t dim = in.u32();
    if (dim == 0) throw Error(ErrorCode::Io, "vocab cache: zero dim");
    const auto id_bytes = in.take(in.u32());
    std::string backend_id(reinterpret_cast<const char*>(id_bytes.data()), id_bytes.size());
    std::vector<TokenId> ids(count);
    std::vector<float> rows(count * dim);
    for (std::size_t r = 0; r < count; ++r) {
        ids[r] = in.u32();
        for (std::size_t d = 0; d < dim; ++d) rows[r * dim + d] = std::bit_cast<float>(in.u32());
    }
    if (!in.done()) throw Error(ErrorCode::Io, "vocab cache: trailing bytes");
    return VocabCache(std::move(backend_id), dim, std::move(ids), std::move(rows));
}

void VocabCache::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write vocab cache " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for vocab cache " + path.string());
}

VocabCache VocabCache::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open vocab cache " + path.string());
    const std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(std::as_bytes(std::span<const char>(raw)));
}

void VocabCache::attach_texts(std::span<const VocabEntry> vocab) {
    std::unordered_map<TokenId, const std::string*> by_id;
    for (const auto& e : vocab) by_id.emplace(e.id, &e.text);
    std::vector<std::string> texts;
    texts.reserve(ids_.size());
    for (TokenId id : ids_) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw Error(ErrorCode::NotFound, "vocab cache: token id " + std::to_string(id) +
                                                 " is not in the backend vocabulary");
        }
        texts.push_back(*it->second);
    }
    texts_ = std::move(texts);
}

std::vector<std::size_t> VocabCache::top_m(const TargetSpec& target, std::size_t m,
                                           double scale) const {
    if (target.dim() != dim_) {
        throw Error(ErrorCode::Dimension, "vocab cache dim " + std::to_string(dim_) +
                                              " does not match target dim " +
                                              std::to_string(target.dim()));
    }
    m = std::min(m, ids_.size());
    std::vector<double> scores(ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) scores[r] = target_alignment(row(r), target, scale);
    std::vector<std::size_t> order(ids_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return scores[a] != scores[b] ? scores[a] > scores[b] : ids_[a] < ids_[b];
                      });
    order.resize(m);
    return order;
}

} // namespace vgd
