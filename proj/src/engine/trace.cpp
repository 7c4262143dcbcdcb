#include "vgd/engine/trace.hpp"

#include "vgd/error.hpp"
#include "vgd/scoring.hpp"

#include <fstream>
#include <sstream>

namespace vgd {
namespace {

using nlohmann::json;

json hyp_to_json(const Hypothesis& h) {
    return {{"ids", h.lm_token_ids},        {"text", h.text},
            {"lm_logprob", h.lm_logprob_sum}, {"align", h.align_score},
            {"score", h.combined_score},    {"clip_tokens", h.clip_token_count},
            {"terminated", h.terminated}};
}

Hypothesis hyp_from_json(const json& j) {
    Hypothesis h;
    h.lm_token_ids = j.at("ids").get<std::vector<TokenId>>();
    h.text = j.at("text").get<std::string>();
    h.lm_logprob_sum = j.at("lm_logprob").get<double>();
    h.align_score = j.at("align").get<double>();
    h.combined_score = j.at("score").get<double>();
    h.clip_token_count = j.at("clip_tokens").get<std::uint32_t>();
    h.terminated = j.at("terminated").get<bool>();
    return h;
}

json hyps_to_json(const std::vector<Hypothesis>& hs) {
    json arr = json::array();
    for (const auto& h : hs) arr.push_back(hyp_to_json(h));
    return arr;
}

std::vector<Hypothesis> hyps_from_json(const json& j) {
    std::vector<Hypothesis> out;
    for (const auto& item : j) out.push_back(hyp_from_json(item));
    return out;
}

json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

json header_to_json(const TraceHeader& h) {
    return {{"alpha", h.alpha},
            {"mode", mode_name(h.mode)},
            {"logit_scale", h.logit_scale},
            {"beam_width", h.beam_width},
            {"init_tokens", h.init_tokens},
            {"max_clip_tokens", h.max_clip_tokens},
            {"template_id", h.template_id},
            {"seed", h.seed},
            {"target_kind", target_kind_name(h.target_kind)}};
}

TargetKind parse_target_kind(std::string_view name) {
    for (auto k : {TargetKind::Image, TargetKind::ImageSet, TargetKind::Text}) {
        if (target_kind_name(k) == name) return k;
    }
    throw Error(ErrorCode::InvalidInput, "unknown target kind '" + std::string(name) + "'");
}

TraceHeader header_from_json(const json& j) {
    TraceHeader h;
    h.alpha = j.at("alpha").get<double>();
    h.mode = parse_mode(j.at("mode").get<std::string>());
    h.logit_scale = j.at("logit_scale").get<double>();
    h.beam_width = j.at("beam_width").get<std::uint32_t>();
    h.init_tokens = j.at("init_tokens").get<std::uint32_t>();
    h.max_clip_tokens = j.at("max_clip_tokens").get<std::uint32_t>();
    h.template_id = j.at("template_id").get<std::string>();
    h.seed = j.at("seed").get<std::int64_t>();
    h.target_kind = parse_target_kind(j.at("target_kind").get<std::string>());
    return h;
}

} // namespace

std::string_view termination_name(TerminationReason reason) noexcept {
    switch (reason) {
    case TerminationReason::NoImprovement: return "no_improvement";
    case TerminationReason::AllTerminated: return "all_terminated";
    case TerminationReason::BudgetExhausted: return "budget_exhausted";
    case TerminationReason::Exhausted: return "exhausted";
    }
    return "no_improvement";
}

TerminationReason parse_termination(std::string_view name) {
    for (auto r : {TerminationReason::NoImprovement, TerminationReason::AllTerminated,
                   TerminationReason::BudgetExhausted, TerminationReason::Exhausted}) {
        if (termination_name(r) == name) return r;
    }
    throw Error(ErrorCode::InvalidInput, "unknown termination reason '" + std::string(name) + "'");
}

void DecodeTrace::write_jsonl(std::ostream& out) const {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        json rec;
        rec["trace_version"] = kTraceVersion;
        rec["step"] = s.step;
        if (i == 0) rec["header"] = header_to_json(header);
        rec["expanded"] = s.expanded;
        rec["survivors"] = hyps_to_json(s.survivors);
        rec["terminated"] = hyps_to_json(s.terminated);
        rec["best_expanded"] = opt_to_json(s.best_expanded);
        rec["best_score"] = opt_to_json(s.best_score);
        rec["termination"] = s.termination ? json(termination_name(*s.termination)) : json(nullptr);
        if (i + 1 == steps.size() && result) rec["result"] = hyp_to_json(*result);
        out << rec.dump() << '\n';
    }
}

std::string DecodeTrace::to_jsonl() const {
    std::ostringstream out;
    write_jsonl(out);
    return out.str();
}

DecodeTrace DecodeTrace::read_jsonl(std::istream& in) {
    DecodeTrace trace;
    std::string line;
    std::size_t line_no = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto rec = json::parse(line);
            const auto version = rec.at("trace_version").get<int>();
            if (version != kTraceVersion) {
                throw Error(ErrorCode::InvalidInput, "unsupported trace_version " + std::to_string(version));
            }
            if (trace.steps.empty()) trace.header = header_from_json(rec.at("header"));
            StepRecord s;
            s.step = rec.at("step").get<std::uint32_t>();
            s.expanded = rec.at("expanded").get<std::size_t>();
            s.survivors = hyps_from_json(rec.at("survivors"));
            s.terminated = hyps_from_json(rec.at("terminated"));
            s.best_expanded = opt_from_json(rec.at("best_expanded"));
            s.best_score = opt_from_json(rec.at("best_score"));
            if (const auto& t = rec.at("termination"); !t.is_null()) {
                s.termination = parse_termination(t.get<std::string>());
            }
            if (auto it = rec.find("result"); it != rec.end()) trace.result = hyp_from_json(*it);
            trace.steps.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput,
                    "trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (trace.steps.empty()) throw Error(ErrorCode::InvalidInput, "trace is empty");
    return trace;
}

DecodeTrace DecodeTrace::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open trace " + path.string());
    return read_jsonl(in);
}

void DecodeTrace::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write trace " + path.string());
    write_jsonl(out);
    if (!out) throw Error(ErrorCode::Io, "write failed for trace " + path.string());
}

ReplayReport replay(const DecodeTrace& trace) {
    ReplayReport report;
    const auto& hdr = trace.header;
    auto check = [&](const Hypothesis& h, const std::string& where) {
        ++report.scores_checked;
        double recomputed = 0.0;
        try {
            recomputed = combined_score(h.align_score, h.lm_logprob_sum, hdr.alpha, hdr.mode);
        } catch (const Error& e) {
            report.mismatches.push_back(where + ": " + e.what());
            return;
        }
        if (recomputed != h.combined_score) {
            std::ostringstream msg;
            msg.precision(17);
            msg << where << ": recorded " << h.combined_score << ", recomputed " << recomputed;
            report.mismatches.push_back(msg.str());
        }
    };

    std::optional<double> prev_best;
    for (const auto& s : trace.steps) {
        ++report.records;
        const auto tag = "step " + std::to_string(s.step);
        for (std::size_t i = 0; i < s.survivors.size(); ++i) {
            check(s.survivors[i], tag + " survivor " + std::to_string(i));
        }
        for (std::size_t i = 0; i < s.terminated.size(); ++i) {
            check(s.terminated[i], tag + " terminated " + std::to_string(i));
        }
        if (s.best_expanded && !s.survivors.empty() &&
            *s.best_expanded != s.survivors.front().combined_score) {
            report.mismatches.push_back(tag + ": best_expanded is not the top survivor score");
        }
        if (prev_best && (!s.best_score || *s.best_score < *prev_best)) {
            report.mismatches.push_back(tag + ": best_score decreased");
        }
        if (s.best_score) prev_best = s.best_score;
    }
    if (trace.result) check(*trace.result, "result");
    return report;
}

} // namespace vgd
