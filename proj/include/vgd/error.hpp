#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vgd {

enum class ErrorCode {
    InvalidScore,
    DegenerateEmbedding,
    Dimension,
    InvalidTarget,
    InvalidConfig,
    InvalidInput,
    Transport,
    Protocol,
    ContextLength,
    TokenBudget,
    Media,
    Io,
    ExpansionExhausted,
    EmptySearch,
    NotFound,
    Template,
    NothingToDistill,
};

/// Stable snake_case name, also used as the `error_code` field on the wire.
std::string_view error_code_name(ErrorCode code) noexcept;

/// Inverse of error_code_name(); unknown names map to Protocol.
ErrorCode error_code_from_name(std::string_view name) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

} // namespace vgd
