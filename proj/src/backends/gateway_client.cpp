#include "vgd/backends/gateway_client.hpp"

#include "vgd/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/beast/core/detail/base64.hpp>
#include <httplib.h>

namespace vgd {
namespace {

using nlohmann::json;

std::string base64_encode(std::span<const std::byte> data) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(data.size()), '\0');
    out.resize(b64::encode(out.data(), data.data(), data.size()));
    return out;
}

ChatFormat chat_format_from_json(const json& j) {
    ChatFormat f;
    f.system_prefix = j.value("system_prefix", f.system_prefix);
    f.system_suffix = j.value("system_suffix", f.system_suffix);
    f.user_prefix = j.value("user_prefix", f.user_prefix);
    f.user_suffix = j.value("user_suffix", f.user_suffix);
    f.assistant_prefix = j.value("assistant_prefix", f.assistant_prefix);
    return f;
}

json chat_format_to_json(const ChatFormat& f) {
    return {{"system_prefix", f.system_prefix},
            {"system_suffix", f.system_suffix},
            {"user_prefix", f.user_prefix},
            {"user_suffix", f.user_suffix},
            {"assistant_prefix", f.assistant_prefix}};
}

[[noreturn]] void protocol_error(const std::string& what) {
    throw Error(ErrorCode::Protocol, "gateway: " + what);
}

} // namespace

GatewayMeta GatewayMeta::from_json(const json& j) {
    GatewayMeta m;
    try {
        m.lm_name = j.at("lm_name").get<std::string>();
        m.align_name = j.at("align_name").get<std::string>();
        m.vocab_size = j.at("vocab_size").get<std::uint32_t>();
        m.dim = j.at("dim").get<std::size_t>();
        m.logit_scale = j.at("logit_scale").get<double>();
        m.max_text_tokens = j.at("max_text_tokens").get<std::uint32_t>();
        m.banned_token_ids = j.at("banned_token_ids").get<std::vector<TokenId>>();
        if (auto it = j.find("eos_token_id"); it != j.end() && !it->is_null()) {
            m.eos_token_id = it->get<TokenId>();
        }
        if (auto it = j.find("chat_format"); it != j.end() && it->is_object()) {
            m.chat_format = chat_format_from_json(*it);
        }
    } catch (const json::exception& e) {
        protocol_error(std::string("malformed /v1/meta: ") + e.what());
    }
    if (m.dim == 0) protocol_error("/v1/meta reports dim 0");
    return m;
}

json GatewayMeta::to_json() const {
    json j{{"lm_name", lm_name},
           {"align_name", align_name},
           {"vocab_size", vocab_size},
           {"dim", dim},
           {"logit_scale", logit_scale},
           {"max_text_tokens", max_text_tokens},
           {"banned_token_ids", banned_token_ids},
           {"chat_format", chat_format_to_json(chat_format)}};
    j["eos_token_id"] = eos_token_id ? json(*eos_token_id) : json(nullptr);
    return j;
}

GatewayBackend::GatewayBackend(std::string base_url, GatewayOptions options)
    : base_url_(std::move(base_url)), options_(options) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    meta_ = GatewayMeta::from_json(get("/v1/meta"));
}

std::string GatewayBackend::backend_id() const {
    return "gateway:" + meta_.align_name + ":" + std::to_string(meta_.dim);
}

namespace {

json handle_response(const httplib::Result& res, const std::string& url) {
    if (!res) {
        throw Error(ErrorCode::Transport,
                    "gateway " + url + " unreachable: " + httplib::to_string(res.error()));
    }
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::exception&) {
        if (res->status >= 400) {
            throw Error(ErrorCode::Protocol, "gateway " + url + " returned HTTP " +
                                                 std::to_string(res->status));
        }
        protocol_error(url + " returned a non-JSON body");
    }
    if (res->status >= 400) {
        const auto code = body.is_object() ? body.value("error_code", std::string("protocol"))
                                           : std::string("protocol");
        const auto message = body.is_object() ? body.value("message", std::string()) : std::string();
        throw Error(error_code_from_name(code),
                    "gateway " + url + " (HTTP " + std::to_string(res->status) + "): " + message);
    }
    return body;
}

template <typename Rep, typename Period>
void configure(httplib::Client& cli, std::chrono::duration<Rep, Period> connect,
               std::chrono::duration<Rep, Period> read) {
    cli.set_connection_timeout(connect);
    cli.set_read_timeout(read);
    cli.set_write_timeout(read);
}

} // namespace

json GatewayBackend::get(const std::string& path) const {
    httplib::Client cli(base_url_);
    configure(cli, options_.connect_timeout, options_.read_timeout);
    return handle_response(cli.Get(path), base_url_ + path);
}

json GatewayBackend::post(const std::string& path, const json& body) const {
    httplib::Client cli(base_url_);
    configure(cli, options_.connect_timeout, options_.read_timeout);
    return handle_response(cli.Post(path, body.dump(), "application/json"), base_url_ + path);
}

std::vector<TokenId> GatewayBackend::tokenize(std::string_view text) const {
    const auto res = post("/v1/lm/tokenize", {{"text", text}});
    try {
        return res.at("ids").get<std::vector<TokenId>>();
    } catch (const json::exception& e) {
        protocol_error(std::string("tokenize: ") + e.what());
    }
}

std::string GatewayBackend::detokenize(std::span<const TokenId> ids) const {
    const auto res = post("/v1/lm/detokenize", {{"ids", std::vector<TokenId>(ids.begin(), ids.end())}});
    try {
        return res.at("text").get<std::string>();
    } catch (const json::exception& e) {
        protocol_error(std::string("detokenize: ") + e.what());
    }
}

std::vector<TokenLogprob> GatewayBackend::next_logprobs(std::span<const TokenId> context,
                                                        std::uint32_t top_k) const {
    if (top_k < 1) throw Error(ErrorCode::InvalidInput, "top_k must be at least 1");
    const auto res = post("/v1/lm/next_logprobs",
                          {{"context_ids", std::vector<TokenId>(context.begin(), context.end())},
                           {"top_k", top_k}});
    std::vector<TokenLogprob> out;
    try {
        for (const auto& c : res.at("candidates")) {
            out.push_back({c.at("id").get<TokenId>(), c.at("logprob").get<double>()});
        }
    } catch (const json::exception& e) {
        protocol_error(std::string("next_logprobs: ") + e.what());
    }
    for (const auto& c : out) {
        if (!std::isfinite(c.logprob) || c.logprob > 0.0) protocol_error("next_logprobs: invalid logprob");
    }
    // The server is asked to exclude banned ids; enforce it regardless so a
    // lax gateway cannot inject control tokens into prompts.
    const std::set<TokenId> banned(meta_.banned_token_ids.begin(), meta_.banned_token_ids.end());
    std::erase_if(out, [&](const TokenLogprob& c) { return banned.count(c.id) > 0; });
    std::stable_sort(out.begin(), out.end(), [](const TokenLogprob& a, const TokenLogprob& b) {
        return a.logprob != b.logprob ? a.logprob > b.logprob : a.id < b.id;
    });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

std::vector<std::uint32_t> GatewayBackend::count_tokens(std::span<const std::string> texts) const {
    std::vector<std::uint32_t> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
        const auto chunk = texts.subspan(start, std::min(options_.batch_size, texts.size() - start));
        const auto res = post("/v1/align/count_tokens",
                              {{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}});
        std::vector<std::uint32_t> counts;
        try {
            counts = res.at("counts").get<std::vector<std::uint32_t>>();
        } catch (const json::exception& e) {
            protocol_error(std::string("count_tokens: ") + e.what());
        }
        if (counts.size() != chunk.size()) protocol_error("count_tokens: wrong number of counts");
        out.insert(out.end(), counts.begin(), counts.end());
    }
    return out;
}

EmbeddingVector GatewayBackend::to_embedding(const json& values) const {
    std::vector<double> v;
    try {
        v = values.get<std::vector<double>>();
    } catch (const json::exception& e) {
        protocol_error(std::string("embedding: ") + e.what());
    }
    if (v.size() != meta_.dim) {
        throw Error(ErrorCode::Dimension, "gateway returned a " + std::to_string(v.size()) +
                                              "-dim embedding, expected " + std::to_string(meta_.dim));
    }
    // Already-unit vectors are kept as sent so both ends see the same f32 values.
    std::vector<float> f(v.begin(), v.end());
    EmbeddingVector as_sent(std::move(f));
    if (as_sent.is_normalized()) return as_sent;
    return EmbeddingVector::normalized(std::span<const double>(v));
}

std::vector<EmbeddingVector> GatewayBackend::embed_text(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
        const auto chunk = texts.subspan(start, std::min(options_.batch_size, texts.size() - start));
        json res;
        try {
            res = post("/v1/align/embed_text",
                       {{"texts", std::vector<std::string>(chunk.begin(), chunk.end())}});
        } catch (const Error& e) {
            if (start == 0) throw;
            throw Error(e.code(), std::string(e.what()) + " (batch offset " + std::to_string(start) + ")");
        }
        const auto it = res.find("embeddings");
        if (it == res.end() || !it->is_array() || it->size() != chunk.size()) {
            protocol_error("embed_text: wrong number of embeddings");
        }
        for (const auto& e : *it) out.push_back(to_embedding(e));
    }
    return out;
}

EmbeddingVector GatewayBackend::embed_image(std::span<const std::byte> image) const {
    const auto res = post("/v1/align/embed_image", {{"image_b64", base64_encode(image)}});
    const auto it = res.find("embedding");
    if (it == res.end()) protocol_error("embed_image: missing embedding");
    return to_embedding(*it);
}

std::vector<VocabEntry> GatewayBackend::vocabulary() const {
    std::call_once(vocab_once_, [this] {
        const std::set<TokenId> banned(meta_.banned_token_ids.begin(), meta_.banned_token_ids.end());
        for (TokenId id = 0; id < meta_.vocab_size; ++id) {
            if (banned.count(id) || (meta_.eos_token_id && *meta_.eos_token_id == id)) continue;
            const TokenId one[] = {id};
            auto text = detokenize(one);
            // Whitespace-only pieces carry no alignment signal.
            if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            vocab_.push_back({id, std::move(text)});
        }
    });
    return vocab_;
}

} // namespace vgd
