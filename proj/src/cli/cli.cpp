#include "vgd/cli.hpp"

#include "vgd/backends/session.hpp"
#include "vgd/backends/vocab_cache.hpp"
#include "vgd/engine/beam_search.hpp"
#include "vgd/engine/trace.hpp"
#include "vgd/error.hpp"
#include "vgd/tasks.hpp"
#include "vgd/templates.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace vgd::cli {
namespace {

using nlohmann::json;

struct Options {
    std::string backend;
    DecodeConfig decode;
    std::string mode = "full";
    std::optional<double> logit_scale;
    std::string template_file;
    std::string cache_file;
    std::string trace_file;
    bool json_output = false;
    bool dry_run = false;

    std::string image;
    std::vector<std::string> images;
    std::string prompt;
    std::uint32_t max_tokens = 0;
    std::vector<std::string> prompts;
    std::string cache_out = "vocab.vgdc";
    std::string vocab_file;
    std::string inspect_file;
    std::string trace_in;
};

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

ImageBlob read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        // Toy fixtures can be named inline instead of through a file.
        if (path.rfind("fixture:", 0) == 0) return to_blob(path);
        throw Error(ErrorCode::Io, "cannot read image " + path);
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return to_blob(bytes);
}

std::string resolve_backend(const Options& o) {
    if (!o.backend.empty()) return o.backend;
    if (const char* url = std::getenv("VGD_GATEWAY_URL"); url && *url) {
        return std::string("gateway:") + url;
    }
    throw UsageError("no backend: pass --backend toy:FILE|gateway:URL or set VGD_GATEWAY_URL");
}

ScorerSession open_session(const Options& o) {
    auto session = ScorerSession::open(resolve_backend(o));
    if (!o.cache_file.empty()) session.set_vocab_cache(VocabCache::load(o.cache_file));
    return session;
}

DecodeConfig resolved_config(const Options& o, const ScorerSession* session) {
    DecodeConfig c = o.decode;
    c.mode = parse_mode(o.mode);
    if (o.logit_scale) {
        c.logit_scale = *o.logit_scale;
    } else if (session) {
        c.logit_scale = session->align().logit_scale();
    }
    return c;
}

TemplateRegistry load_templates(const Options& o) {
    return o.template_file.empty() ? TemplateRegistry::builtins()
                                   : TemplateRegistry::from_file(o.template_file);
}

json config_json(const Options& o, const std::string& command) {
    const auto c = resolved_config(o, nullptr);
    json j{{"command", command},
           {"backend", o.backend.empty() ? json(nullptr) : json(o.backend)},
           {"beam", c.beam_width},
           {"alpha", c.alpha},
           {"init_tokens", c.init_tokens},
           {"tokens", c.max_clip_tokens},
           {"mode", mode_name(c.mode)},
           {"logit_scale", o.logit_scale ? json(*o.logit_scale) : json("backend")},
           {"template_file", o.template_file},
           {"seed", c.seed},
           {"cache", o.cache_file},
           {"trace", o.trace_file},
           {"json", o.json_output}};
    if (const char* url = std::getenv("VGD_GATEWAY_URL"); o.backend.empty() && url && *url) {
        j["backend"] = std::string("gateway:") + url;
    }
    return j;
}

void print_dry_run(const Options& o, const std::string& command, std::ostream& out) {
    const auto j = config_json(o, command);
    if (o.json_output) {
        out << j.dump() << '\n';
        return;
    }
    for (const auto& [key, value] : j.items()) out << key << " = " << value.dump() << '\n';
}

void emit_decode(const Options& o, const DecodeResult& r, std::ostream& out) {
    if (!o.trace_file.empty()) r.trace.save(o.trace_file);
    if (o.json_output) {
        json j{{"prompt", r.prompt()},
               {"score", r.score()},
               {"align", r.best.align_score},
               {"lm_logprob", r.best.lm_logprob_sum},
               {"steps", r.steps()},
               {"clip_tokens", r.best.clip_token_count},
               {"termination", termination_name(r.termination)}};
        out << j.dump() << '\n';
    } else {
        out << r.prompt() << '\n';
    }
}

int cmd_invert(const Options& o, std::ostream& out) {
    const auto session = open_session(o);
    const auto image = read_image(o.image);
    emit_decode(o, invert(session, image, resolved_config(o, &session), load_templates(o)), out);
    return kExitOk;
}

int cmd_style(const Options& o, std::ostream& out) {
    const auto session = open_session(o);
    std::vector<ImageBlob> images;
    for (const auto& p : o.images) images.push_back(read_image(p));
    emit_decode(o, style(session, images, resolved_config(o, &session), load_templates(o)), out);
    return kExitOk;
}

int cmd_distill(const Options& o, std::ostream& out) {
    const auto session = open_session(o);
    emit_decode(o, distill(session, o.prompt, o.max_tokens, resolved_config(o, &session), load_templates(o)),
                out);
    return kExitOk;
}

int cmd_fuse(const Options& o, std::ostream& out) {
    const auto fused = fuse(o.prompts);
    if (o.json_output) {
        out << json{{"prompt", fused}}.dump() << '\n';
    } else {
        out << fused << '\n';
    }
    return kExitOk;
}

int cmd_score(const Options& o, std::ostream& out) {
    const auto session = open_session(o);
    const auto report = align_report(session, o.prompt, read_image(o.image), o.logit_scale);
    if (o.json_output) {
        out << json{{"cosine", report.cosine}, {"scaled", report.scaled}, {"token_count", report.token_count}}.dump()
            << '\n';
    } else {
        out << std::setprecision(6) << "cosine=" << report.cosine << " scaled=" << report.scaled
            << " tokens=" << report.token_count << '\n';
    }
    return kExitOk;
}

std::vector<VocabEntry> read_vocab_file(const std::string& path, const ScorerSession& session) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read vocab file " + path);
    std::vector<VocabEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto ids = session.lm().tokenize(line);
        if (ids.size() != 1) continue; // only single LM tokens can seed a prefix id
        out.push_back({ids.front(), line});
    }
    return out;
}

int cmd_cache_build(const Options& o, std::ostream& out) {
    const auto session = ScorerSession::open(resolve_backend(o));
    const auto vocab = o.vocab_file.empty() ? session.align().vocabulary()
                                            : read_vocab_file(o.vocab_file, session);
    const auto cache = VocabCache::build(session.align(), vocab);
    cache.save(o.cache_out);
    if (o.json_output) {
        out << json{{"path", o.cache_out}, {"entries", cache.size()}, {"dim", cache.dim()},
                    {"backend_id", cache.backend_id()}}.dump()
            << '\n';
    } else {
        out << "wrote " << cache.size() << " entries (dim " << cache.dim() << ") to " << o.cache_out << '\n';
    }
    return kExitOk;
}

int cmd_cache_inspect(const Options& o, std::ostream& out) {
    const auto cache = VocabCache::load(o.inspect_file);
    json j{{"path", o.inspect_file},
           {"version", VocabCache::kVersion},
           {"backend_id", cache.backend_id()},
           {"entries", cache.size()},
           {"dim", cache.dim()}};
    if (o.json_output) {
        out << j.dump() << '\n';
    } else {
        for (const auto& [key, value] : j.items()) out << key << " = " << value.dump() << '\n';
    }
    return kExitOk;
}

int cmd_trace_replay(const Options& o, std::ostream& out, std::ostream& err) {
    const auto report = replay(DecodeTrace::load(o.trace_in));
    if (o.json_output) {
        out << json{{"records", report.records}, {"scores_checked", report.scores_checked},
                    {"ok", report.ok()}, {"mismatches", report.mismatches}}.dump()
            << '\n';
    } else {
        out << "records=" << report.records << " scores=" << report.scores_checked << ' '
            << (report.ok() ? "ok" : "MISMATCH") << '\n';
    }
    for (const auto& m : report.mismatches) err << m << '\n';
    return report.ok() ? kExitOk : kExitRuntime;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Visually guided prompt decoding"};
    app.name("vgd");
    app.set_config("--config", "", "TOML config file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--backend", o.backend, "toy:FILE or gateway:URL (default: gateway:$VGD_GATEWAY_URL)");
    app.add_option("--beam", o.decode.beam_width, "Beam width K")->check(CLI::PositiveNumber);
    app.add_option("--alpha", o.decode.alpha, "Weight of the LM log-prob")->check(CLI::NonNegativeNumber);
    app.add_option("--init-tokens", o.decode.init_tokens, "Prefix tokens picked from the vocabulary cache (M)");
    app.add_option("--tokens", o.decode.max_clip_tokens, "Prompt budget in alignment tokens")
        ->check(CLI::Range(1u, kMaxAlignTokens));
    app.add_option("--mode", o.mode, "Objective")
        ->check(CLI::IsMember({"full", "llm-only", "clip-only", "llm_only", "clip_only"}));
    app.add_option("--logit-scale", o.logit_scale, "Alignment scale (default: from backend)")
        ->check(CLI::PositiveNumber);
    app.add_option("--template-file", o.template_file, "JSON file overriding prompt templates");
    app.add_option("--cache", o.cache_file, "Prebuilt vocabulary cache");
    app.add_option("--seed", o.decode.seed, "Recorded in the trace; decoding is deterministic");
    app.add_option("--trace", o.trace_file, "Write the decode trace (JSON lines) here");
    app.add_flag("--json", o.json_output, "Machine-readable output");
    app.add_flag("--dry-run", o.dry_run, "Print the resolved configuration and exit");

    auto* invert_cmd = app.add_subcommand("invert", "Prompt for one image");
    invert_cmd->add_option("--image", o.image, "Image file")->required();

    auto* style_cmd = app.add_subcommand("style", "Shared-style prompt for several images");
    style_cmd->add_option("--images", o.images, "Image files (at least 2)")->required()->expected(1, -1);

    auto* distill_cmd = app.add_subcommand("distill", "Shorten a prompt");
    distill_cmd->add_option("--prompt", o.prompt, "Source prompt")->required();
    distill_cmd->add_option("--max-tokens", o.max_tokens, "Budget in alignment tokens")
        ->required()
        ->check(CLI::Range(1u, kMaxAlignTokens));

    auto* fuse_cmd = app.add_subcommand("fuse", "Concatenate prompts");
    fuse_cmd->add_option("--prompts", o.prompts, "Prompts in order")->required()->expected(1, -1);

    auto* score_cmd = app.add_subcommand("score", "Prompt-to-image alignment");
    score_cmd->add_option("--prompt", o.prompt, "Prompt")->required();
    score_cmd->add_option("--image", o.image, "Image file")->required();

    auto* cache_cmd = app.add_subcommand("cache", "Vocabulary cache");
    cache_cmd->require_subcommand(1);
    auto* cache_build = cache_cmd->add_subcommand("build", "Embed the vocabulary and write a cache file");
    cache_build->add_option("--out", o.cache_out, "Output path");
    cache_build->add_option("--vocab-file", o.vocab_file, "Newline-separated token strings");
    auto* cache_inspect = cache_cmd->add_subcommand("inspect", "Print a cache file header");
    cache_inspect->add_option("file", o.inspect_file, "Cache file")->required();

    auto* trace_cmd = app.add_subcommand("trace", "Decode traces");
    trace_cmd->require_subcommand(1);
    auto* trace_replay = trace_cmd->add_subcommand("replay", "Recompute every score in a trace");
    trace_replay->add_option("file", o.trace_in, "Trace file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::string command;
    for (const auto* sub : app.get_subcommands()) {
        command = sub->get_name();
        for (const auto* inner : sub->get_subcommands()) command += " " + inner->get_name();
    }

    try {
        if (o.dry_run) {
            parse_mode(o.mode);
            print_dry_run(o, command, out);
            return kExitOk;
        }
        if (invert_cmd->parsed()) return cmd_invert(o, out);
        if (style_cmd->parsed()) return cmd_style(o, out);
        if (distill_cmd->parsed()) return cmd_distill(o, out);
        if (fuse_cmd->parsed()) return cmd_fuse(o, out);
        if (score_cmd->parsed()) return cmd_score(o, out);
        if (cache_build->parsed()) return cmd_cache_build(o, out);
        if (cache_inspect->parsed()) return cmd_cache_inspect(o, out);
        if (trace_replay->parsed()) return cmd_trace_replay(o, out, err);
    } catch (const UsageError& e) {
        err << "vgd: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "vgd: " << error_code_name(e.code()) << ": " << e.what() << '\n';
        return e.code() == ErrorCode::InvalidConfig ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        err << "vgd: " << e.what() << '\n';
        return kExitRuntime;
    }
    err << "vgd: no command\n";
    return kExitUsage;
}

} // namespace vgd::cli
