#include "vgd/backends/session.hpp"

#include "vgd/backends/gateway_client.hpp"
#include "vgd/backends/toy_backend.hpp"
#include "vgd/error.hpp"

#include <mutex>
#include <optional>

namespace vgd {

struct ScorerSession::CacheSlot {
    std::mutex mutex;
    std::optional<VocabCache> cache;
};

ScorerSession::ScorerSession(std::shared_ptr<const LmScorer> lm,
                             std::shared_ptr<const AlignScorer> align)
    : lm_(std::move(lm)), align_(std::move(align)), cache_(std::make_shared<CacheSlot>()) {
    if (!lm_ || !align_) throw Error(ErrorCode::InvalidConfig, "session needs both scorers");
}

ScorerSession ScorerSession::open(std::string_view backend_spec) {
    const auto colon = backend_spec.find(':');
    if (colon == std::string_view::npos) {
        throw Error(ErrorCode::InvalidConfig,
                    "backend must be toy:FILE or gateway:URL, got '" + std::string(backend_spec) + "'");
    }
    const auto kind = backend_spec.substr(0, colon);
    const std::string arg(backend_spec.substr(colon + 1));
    if (kind == "toy") {
        auto toy = std::make_shared<const ToyBackend>(ToyBackend::from_file(arg));
        return ScorerSession(toy, toy);
    }
    if (kind == "gateway") {
        auto gw = std::make_shared<const GatewayBackend>(arg);
        return ScorerSession(gw, gw);
    }
    throw Error(ErrorCode::InvalidConfig, "unknown backend kind '" + std::string(kind) + "'");
}

void ScorerSession::set_vocab_cache(VocabCache cache) {
    if (cache.dim() != align_->dim()) {
        throw Error(ErrorCode::Dimension, "vocab cache dim " + std::to_string(cache.dim()) +
                                              " does not match backend dim " +
                                              std::to_string(align_->dim()));
    }
    if (!cache.has_texts()) cache.attach_texts(align_->vocabulary());
    std::lock_guard lock(cache_->mutex);
    cache_->cache = std::move(cache);
}

const VocabCache& ScorerSession::vocab_cache() const {
    std::lock_guard lock(cache_->mutex);
    if (!cache_->cache) cache_->cache = VocabCache::build(*align_, align_->vocabulary());
    return *cache_->cache;
}

} // namespace vgd
