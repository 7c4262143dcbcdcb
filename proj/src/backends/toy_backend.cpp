#include "vgd/backends/toy_backend.hpp"

#include "vgd/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace vgd {
namespace {

using nlohmann::json;

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, "toy backend: " + msg); }

} // namespace

ToyConfig ToyConfig::from_json(const json& j) {
    ToyConfig c;
    try {
        read_opt(j, "backend_id", c.backend_id);
        read_opt(j, "lm_name", c.lm_name);
        read_opt(j, "align_name", c.align_name);
        c.vocab = j.at("vocab").get<std::vector<std::string>>();
        if (j.contains("unk_id") && !j["unk_id"].is_null()) c.unk_id = j["unk_id"].get<TokenId>();
        if (j.contains("eos_id") && !j["eos_id"].is_null()) c.eos_id = j["eos_id"].get<TokenId>();
        read_opt(j, "banned_ids", c.banned_ids);
        read_opt(j, "bigram_logits", c.bigram_logits);
        read_opt(j, "bigram_probs", c.bigram_probs);
        c.embeddings = j.at("embeddings").get<std::vector<std::vector<double>>>();
        read_opt(j, "empty_text_embedding", c.empty_text_embedding);
        read_opt(j, "fixtures", c.fixtures);
        read_opt(j, "logit_scale", c.logit_scale);
        read_opt(j, "max_text_tokens", c.max_text_tokens);
        read_opt(j, "max_context", c.max_context);
    } catch (const json::exception& e) {
        invalid(e.what());
    }
    return c;
}

json ToyConfig::to_json() const {
    json j;
    j["backend_id"] = backend_id;
    j["lm_name"] = lm_name;
    j["align_name"] = align_name;
    j["vocab"] = vocab;
    j["unk_id"] = unk_id ? json(*unk_id) : json(nullptr);
    j["eos_id"] = eos_id ? json(*eos_id) : json(nullptr);
    j["banned_ids"] = banned_ids;
    if (!bigram_logits.empty()) j["bigram_logits"] = bigram_logits;
    if (!bigram_probs.empty()) j["bigram_probs"] = bigram_probs;
    j["embeddings"] = embeddings;
    if (!empty_text_embedding.empty()) j["empty_text_embedding"] = empty_text_embedding;
    j["fixtures"] = fixtures;
    j["logit_scale"] = logit_scale;
    j["max_text_tokens"] = max_text_tokens;
    j["max_context"] = max_context;
    return j;
}

ToyBackend::ToyBackend(ToyConfig config) : config_(std::move(config)) {
    const std::size_t n = config_.vocab.size();
    if (n == 0 || n > 256) invalid("vocab must hold 1..256 tokens");
    for (TokenId i = 0; i < n; ++i) {
        const auto& w = config_.vocab[i];
        if (w.empty() || std::any_of(w.begin(), w.end(), [](unsigned char ch) { return std::isspace(ch); })) {
            invalid("vocab entries must be non-empty and contain no whitespace");
        }
        if (!index_.emplace(w, i).second) invalid("duplicate vocab entry '" + w + "'");
    }
    auto check_id = [n](std::optional<TokenId> id, const char* what) {
        if (id && *id >= n) invalid(std::string(what) + " out of range");
    };
    check_id(config_.unk_id, "unk_id");
    check_id(config_.eos_id, "eos_id");
    for (TokenId id : config_.banned_ids) check_id(id, "banned id");

    if (config_.embeddings.size() != n) invalid("embeddings must have one row per vocab entry");
    dim_ = config_.embeddings.front().size();
    if (dim_ == 0) invalid("embedding dim must be positive");
    for (const auto& row : config_.embeddings) {
        if (row.size() != dim_) invalid("embedding rows disagree on dim");
    }
    if (config_.empty_text_embedding.empty()) {
        config_.empty_text_embedding.assign(dim_, 1.0);
    } else if (config_.empty_text_embedding.size() != dim_) {
        invalid("empty_text_embedding has wrong dim");
    }
    for (const auto& [name, v] : config_.fixtures) {
        if (v.size() != dim_) invalid("fixture '" + name + "' has wrong dim");
    }
    if (!(config_.logit_scale > 0.0)) invalid("logit_scale must be positive");
    if (config_.max_text_tokens < 1) invalid("max_text_tokens must be positive");

    const bool have_logits = !config_.bigram_logits.empty();
    const bool have_probs = !config_.bigram_probs.empty();
    if (have_logits == have_probs) invalid("exactly one of bigram_logits / bigram_probs is required");
    const auto& table = have_logits ? config_.bigram_logits : config_.bigram_probs;
    if (table.size() != n) invalid("bigram table must have one row per vocab entry");
    logprobs_.resize(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = table[r];
        if (row.size() != n) invalid("bigram rows must have one entry per vocab entry");
        double* out = logprobs_.data() + r * n;
        if (have_logits) {
            const double mx = *std::max_element(row.begin(), row.end());
            if (!std::isfinite(mx)) invalid("bigram logits must be finite");
            double z = 0.0;
            for (double v : row) z += std::exp(v - mx);
            const double lse = mx + std::log(z);
            for (std::size_t c = 0; c < n; ++c) out[c] = row[c] - lse;
        } else {
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0) || !std::isfinite(p)) invalid("bigram probabilities must be >= 0");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-6) invalid("bigram probability rows must sum to 1");
            const double log_sum = std::log(sum);
            for (std::size_t c = 0; c < n; ++c) {
                out[c] = row[c] > 0.0 ? std::log(row[c]) - log_sum
                                      : -std::numeric_limits<double>::infinity();
            }
        }
    }

    lm_banned_ = config_.banned_ids;
    if (config_.unk_id) lm_banned_.push_back(*config_.unk_id);
    std::sort(lm_banned_.begin(), lm_banned_.end());
    lm_banned_.erase(std::unique(lm_banned_.begin(), lm_banned_.end()), lm_banned_.end());
}

ToyBackend ToyBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open toy backend file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        invalid(path.string() + ": " + e.what());
    }
    return ToyBackend(ToyConfig::from_json(j));
}

std::span<const double> ToyBackend::row_logprobs(TokenId prev) const {
    const std::size_t n = config_.vocab.size();
    if (prev >= n) throw Error(ErrorCode::InvalidInput, "token id out of range");
    return {logprobs_.data() + prev * n, n};
}

std::vector<std::string> ToyBackend::words(std::string_view text) const {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

TokenId ToyBackend::word_id(const std::string& word) const {
    if (auto it = index_.find(word); it != index_.end()) return it->second;
    if (config_.unk_id) return *config_.unk_id;
    throw Error(ErrorCode::InvalidInput, "word '" + word + "' is not in the toy vocabulary");
}

std::vector<TokenId> ToyBackend::tokenize(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const auto& w : words(text)) ids.push_back(word_id(w));
    return ids;
}

std::string ToyBackend::detokenize(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id >= config_.vocab.size()) throw Error(ErrorCode::InvalidInput, "token id out of range");
        if (!out.empty()) out += ' ';
        out += config_.vocab[id];
    }
    return out;
}

std::vector<TokenLogprob> ToyBackend::next_logprobs(std::span<const TokenId> context,
                                                    std::uint32_t top_k) const {
    if (top_k < 1) throw Error(ErrorCode::InvalidInput, "top_k must be at least 1");
    if (context.empty()) throw Error(ErrorCode::InvalidInput, "context must not be empty");
    if (context.size() > config_.max_context) {
        throw Error(ErrorCode::ContextLength, "context of " + std::to_string(context.size()) +
                                                  " tokens exceeds limit " +
                                                  std::to_string(config_.max_context));
    }
    const auto row = row_logprobs(context.back());
    std::vector<TokenLogprob> cands;
    cands.reserve(row.size());
    for (TokenId id = 0; id < row.size(); ++id) {
        if (!std::isfinite(row[id])) continue;
        if (std::binary_search(lm_banned_.begin(), lm_banned_.end(), id)) continue;
        cands.push_back({id, row[id]});
    }
    const auto by_rank = [](const TokenLogprob& a, const TokenLogprob& b) {
        return a.logprob != b.logprob ? a.logprob > b.logprob : a.id < b.id;
    };
    const std::size_t k = std::min<std::size_t>(top_k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(), by_rank);
    cands.resize(k);
    return cands;
}

std::vector<std::uint32_t> ToyBackend::count_tokens(std::span<const std::string> texts) const {
    std::vector<std::uint32_t> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(static_cast<std::uint32_t>(words(t).size()));
    return out;
}

EmbeddingVector ToyBackend::embed_one(const std::string& text) const {
    const auto ids = tokenize(text);
    if (ids.empty()) return EmbeddingVector::normalized(std::span<const double>(config_.empty_text_embedding));
    std::vector<double> sum(dim_, 0.0);
    for (TokenId id : ids) {
        const auto& row = config_.embeddings[id];
        for (std::size_t d = 0; d < dim_; ++d) sum[d] += row[d];
    }
    return EmbeddingVector::normalized(std::span<const double>(sum));
}

std::vector<EmbeddingVector> ToyBackend::embed_text(std::span<const std::string> texts) const {
    const auto counts = count_tokens(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (counts[i] > config_.max_text_tokens) {
            throw Error(ErrorCode::TokenBudget,
                        "text " + std::to_string(i) + " has " + std::to_string(counts[i]) +
                            " tokens, limit is " + std::to_string(config_.max_text_tokens));
        }
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

EmbeddingVector ToyBackend::embed_image(std::span<const std::byte> image) const {
    std::string blob(reinterpret_cast<const char*>(image.data()), image.size());
    while (!blob.empty() && std::isspace(static_cast<unsigned char>(blob.back()))) blob.pop_back();
    constexpr std::string_view kPrefix = "fixture:";
    if (blob.rfind(kPrefix, 0) != 0) {
        throw Error(ErrorCode::Media, "toy backend only decodes 'fixture:<name>' images");
    }
    const auto name = blob.substr(kPrefix.size());
    const auto it = config_.fixtures.find(name);
    if (it == config_.fixtures.end()) throw Error(ErrorCode::Media, "unknown fixture '" + name + "'");
    return EmbeddingVector::normalized(std::span<const double>(it->second));
}

std::vector<VocabEntry> ToyBackend::vocabulary() const {
    std::vector<VocabEntry> out;
    for (TokenId id = 0; id < config_.vocab.size(); ++id) {
        if (std::binary_search(lm_banned_.begin(), lm_banned_.end(), id)) continue;
        if (config_.eos_id && *config_.eos_id == id) continue;
        out.push_back({id, config_.vocab[id]});
    }
    return out;
}

} // namespace vgd
