#include "vgd/error.hpp"

#include <array>
#include <utility>

namespace vgd {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 17> kNames{{
    {ErrorCode::InvalidScore, "invalid_score"},
    {ErrorCode::DegenerateEmbedding, "degenerate_embedding"},
    {ErrorCode::Dimension, "dimension"},
    {ErrorCode::InvalidTarget, "invalid_target"},
    {ErrorCode::InvalidConfig, "invalid_config"},
    {ErrorCode::InvalidInput, "invalid_input"},
    {ErrorCode::Transport, "transport"},
    {ErrorCode::Protocol, "protocol"},
    {ErrorCode::ContextLength, "context_length"},
    {ErrorCode::TokenBudget, "token_budget"},
    {ErrorCode::Media, "media"},
    {ErrorCode::Io, "io"},
    {ErrorCode::ExpansionExhausted, "expansion_exhausted"},
    {ErrorCode::EmptySearch, "empty_search"},
    {ErrorCode::NotFound, "not_found"},
    {ErrorCode::Template, "template"},
    {ErrorCode::NothingToDistill, "nothing_to_distill"},
}};

} // namespace

std::string_view error_code_name(ErrorCode code) noexcept {
    for (const auto& [c, name] : kNames) {
        if (c == code) return name;
    }
    return "protocol";
}

ErrorCode error_code_from_name(std::string_view name) noexcept {
    for (const auto& [c, n] : kNames) {
        if (n == name) return c;
    }
    return ErrorCode::Protocol;
}

} // namespace vgd
