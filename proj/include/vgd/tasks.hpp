#pragma once

#include "vgd/backends/session.hpp"
#include "vgd/engine/beam_search.hpp"
#include "vgd/templates.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vgd {

using ImageBlob = std::vector<std::byte>;

ImageBlob to_blob(std::string_view bytes);

/// Prompt whose alignment to one image is maximized (template "inversion").
DecodeResult invert(const ScorerSession& session, std::span<const std::byte> image,
                    DecodeConfig config, const TemplateRegistry& templates = TemplateRegistry::builtins());

/// Single prompt for the shared style of >= 2 images (template "style").
DecodeResult style(const ScorerSession& session, std::span<const ImageBlob> images,
                   DecodeConfig config, const TemplateRegistry& templates = TemplateRegistry::builtins());

/// Shorter prompt aligned to the embedding of `long_prompt`, at most
/// `max_tokens` alignment tokens long (template "distill").
DecodeResult distill(const ScorerSession& session, const std::string& long_prompt,
                     std::uint32_t max_tokens, DecodeConfig config,
                     const TemplateRegistry& templates = TemplateRegistry::builtins());

/// Joins independently inverted prompts with ", " in input order.
std::string fuse(std::span<const std::string> prompts);

struct AlignReport {
    double cosine = 0.0;
    double scaled = 0.0;
    std::uint32_t token_count = 0;
};

/// Prompt-to-image alignment, scaled by the backend's logit scale unless
/// `logit_scale` is given.
AlignReport align_report(const ScorerSession& session, const std::string& prompt,
                         std::span<const std::byte> image, std::optional<double> logit_scale = {});

} // namespace vgd
