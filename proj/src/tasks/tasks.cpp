#include "vgd/tasks.hpp"

#include "vgd/error.hpp"
#include "vgd/scoring.hpp"

namespace vgd {

ImageBlob to_blob(std::string_view bytes) {
    const auto raw = std::as_bytes(std::span<const char>(bytes.data(), bytes.size()));
    return ImageBlob(raw.begin(), raw.end());
}

DecodeResult invert(const ScorerSession& session, std::span<const std::byte> image,
                    DecodeConfig config, const TemplateRegistry& templates) {
    auto target = TargetSpec::image(session.align().embed_image(image));
    config.template_id = "inversion";
    return decode(target, session, config, {&templates, {}});
}

DecodeResult style(const ScorerSession& session, std::span<const ImageBlob> images,
                   DecodeConfig config, const TemplateRegistry& templates) {
    if (images.size() < 2) throw Error(ErrorCode::InvalidTarget, "style needs at least 2 images");
    std::vector<EmbeddingVector> embs;
    embs.reserve(images.size());
    for (const auto& img : images) embs.push_back(session.align().embed_image(img));
    auto target = TargetSpec::image_set(std::move(embs));
    config.template_id = "style";
    return decode(target, session, config, {&templates, {}});
}

DecodeResult distill(const ScorerSession& session, const std::string& long_prompt,
                     std::uint32_t max_tokens, DecodeConfig config,
                     const TemplateRegistry& templates) {
    if (long_prompt.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::InvalidInput, "distill needs a non-empty prompt");
    }
    const std::string texts[] = {long_prompt};
    const auto source_tokens = session.align().count_tokens(texts).at(0);
    if (max_tokens >= source_tokens) {
        throw Error(ErrorCode::NothingToDistill,
                    "budget of " + std::to_string(max_tokens) + " tokens is not shorter than the " +
                        std::to_string(source_tokens) + "-token source prompt");
    }
    auto target = TargetSpec::text(session.align().embed_text(texts).at(0));
    config.template_id = "distill";
    config.max_clip_tokens = max_tokens;
    config.init_tokens = std::min(config.init_tokens, max_tokens);
    Bindings bindings{{"max_length", std::to_string(max_tokens)}, {"target_prompt", long_prompt}};
    return decode(target, session, config, {&templates, std::move(bindings)});
}

std::string fuse(std::span<const std::string> prompts) {
    if (prompts.size() < 2) throw Error(ErrorCode::InvalidInput, "fuse needs at least 2 prompts");
    std::string out = prompts.front();
    for (std::size_t i = 1; i < prompts.size(); ++i) out += ", " + prompts[i];
    return out;
}

AlignReport align_report(const ScorerSession& session, const std::string& prompt,
                         std::span<const std::byte> image, std::optional<double> logit_scale) {
    const std::string texts[] = {prompt};
    AlignReport report;
    report.token_count = session.align().count_tokens(texts).at(0);
    const auto text_emb = session.align().embed_text(texts).at(0);
    const auto image_emb = session.align().embed_image(image);
    report.cosine = cosine_alignment(text_emb, image_emb, 1.0);
    report.scaled = report.cosine * logit_scale.value_or(session.align().logit_scale());
    return report;
}

} // namespace vgd
