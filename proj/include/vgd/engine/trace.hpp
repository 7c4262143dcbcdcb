#pragma once

#include "vgd/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vgd {

inline constexpr int kTraceVersion = 1;

enum class TerminationReason {
    NoImprovement,   // best expanded score <= best score so far
    AllTerminated,   // every beam emitted EOS or ran out of budget mid-step
    BudgetExhausted, // every live beam already holds max_clip_tokens
    Exhausted,       // the LM offered no usable continuation
};

std::string_view termination_name(TerminationReason reason) noexcept;
TerminationReason parse_termination(std::string_view name);

/// Settings a trace needs to be replayed through combined_score().
struct TraceHeader {
    double alpha = 0.0;
    Mode mode = Mode::Full;
    double logit_scale = 0.0;
    std::uint32_t beam_width = 0;
    std::uint32_t init_tokens = 0;
    std::uint32_t max_clip_tokens = 0;
    std::string template_id;
    std::int64_t seed = 0;
    TargetKind target_kind = TargetKind::Image;

    friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/// One decode step. Step 0 holds the initial hypothesis.
struct StepRecord {
    std::uint32_t step = 0;
    std::size_t expanded = 0;                  // live children scored this step
    std::vector<Hypothesis> survivors;         // after pruning, best first
    std::vector<Hypothesis> terminated;        // moved to the pool this step
    std::optional<double> best_expanded;       // survivors.front() score
    std::optional<double> best_score;          // best so far after this step; empty = none yet
    std::optional<TerminationReason> termination;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct DecodeTrace {
    TraceHeader header;
    std::vector<StepRecord> steps;
    std::optional<Hypothesis> result;

    friend bool operator==(const DecodeTrace&, const DecodeTrace&) = default;

    /// JSON lines, one record per step; the header rides on step 0 and the
    /// result on the last record. Every record carries trace_version.
    void write_jsonl(std::ostream& out) const;
    std::string to_jsonl() const;
    static DecodeTrace read_jsonl(std::istream& in);
    static DecodeTrace load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct ReplayReport {
    std::size_t records = 0;
    std::size_t scores_checked = 0;
    std::vector<std::string> mismatches;

    bool ok() const noexcept { return mismatches.empty(); }
};

/// Recomputes every recorded combined score from its align/lm parts and
/// checks that best_score never decreases.
ReplayReport replay(const DecodeTrace& trace);

} // namespace vgd
