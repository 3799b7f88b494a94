#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/modes.hpp"

namespace dualtune {

inline constexpr std::string_view kCorpusSchemaId = "dualtune.corpus.v1";

inline constexpr std::string_view kThinkOpenTag = "<think>";
inline constexpr std::string_view kThinkCloseTag = "</think>";
inline constexpr std::string_view kAnswerOpenTag = "<answer>";
inline constexpr std::string_view kAnswerCloseTag = "</answer>";

enum class Modality { Image, Video, TextOnly };
enum class AnswerKind { MultipleChoice, Numeric, FreeText };

std::string_view modality_name(Modality m);
std::string_view answer_kind_name(AnswerKind k);
std::optional<Modality> parse_modality(std::string_view name);
std::optional<AnswerKind> parse_answer_kind(std::string_view name);

struct Choice {
    std::string letter;  // single uppercase letter
    std::string text;
};

// One record of the line-delimited corpus format. `thinking` may be empty,
// in which case the trace can only serve direct-answer manifests.
struct RawTrace {
    std::string id;
    std::string task_label;
    Modality modality = Modality::TextOnly;
    std::vector<std::string> media;
    std::string question;
    std::string thinking;
    std::string answer;
    AnswerKind answer_kind = AnswerKind::FreeText;
    std::vector<Choice> choices;
};

// The CoT and DA renditions of one trace. Both share question, media and
// gold answer; only the target text differs.
struct PairedSample {
    RawTrace base;
    std::string cot_target;  // <think>...</think><answer>...</answer>
    std::string da_target;   // bare gold answer
};

struct ManifestEntry {
    RawTrace trace;
    EvalMode mode = EvalMode::DirectAnswer;
    std::string target;
    std::string system_prompt_id;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    // source paths, filter settings, selection predicates; keys sorted so
    // serialized provenance is reproducible
    std::map<std::string, std::string> provenance;

    // entry count per (task_label, mode)
    std::map<std::pair<std::string, EvalMode>, std::size_t> counts() const;
    std::set<std::string> task_labels() const;
};

struct CorpusReject {
    std::size_t line = 0;  // 1-based line number in the source file
    std::string reason;
};

struct CorpusLoadResult {
    std::vector<RawTrace> traces;
    std::vector<CorpusReject> rejects;
    std::vector<std::string> warnings;
};

// Reads a line-delimited corpus file. Records that fail schema validation
// land in `rejects` with their line number; with strict=true the first
// invalid line throws instead. Unreadable files always throw.
CorpusLoadResult load_corpus(const std::filesystem::path& path,
                             std::string_view schema_id = kCorpusSchemaId,
                             bool strict = false);

// Why a trace cannot be turned into a CoT/DA pair.
enum class PairBlocker { None, EmptyThinking, TagInThinking, TagInAnswer };
PairBlocker pairability(const RawTrace& trace);
std::string_view pair_blocker_name(PairBlocker b);

// Builds the paired renditions. Throws std::invalid_argument when
// pairability(trace) != PairBlocker::None.
PairedSample strip_thinking(const RawTrace& trace);

struct WaitFilterPolicy {
    std::vector<std::string> markers = {"wait"};
    int max_repeats = 3;
};

struct FilterDecision {
    bool keep = true;
    int count = 0;
};

// Case-insensitive whole-word occurrence count over `text`.
int count_marker_words(std::string_view text, std::span<const std::string> markers);

// Drops the trace iff the marker count in `thinking` exceeds max_repeats.
FilterDecision filter_wait_repetition(const RawTrace& trace, const WaitFilterPolicy& policy);

// Dual mixture: both renditions of every pair, sorted by id with the CoT
// entry first. Throws on duplicate sample ids.
DatasetManifest build_dual_mixture(std::span<const PairedSample> pairs);

// Single-mode manifest. DA mode accepts any trace (DA-only traces
// included); CoT mode requires every trace to be pairable.
DatasetManifest build_single_mode_manifest(std::span<const RawTrace> traces, EvalMode mode);

// Keeps entries whose task_label is in task_set and whose mode matches
// mode_filter when given. task_set must be non-empty.
DatasetManifest emit_subset(const DatasetManifest& manifest,
                            const std::set<std::string>& task_set,
                            std::optional<EvalMode> mode_filter = std::nullopt);

// Unique base traces of a manifest, sorted by id.
std::vector<RawTrace> unique_traces(const DatasetManifest& manifest);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& jsonl_path);
DatasetManifest read_manifest(const std::filesystem::path& jsonl_path);

// Sidecar summary: per-(task, mode) counts plus provenance.
void write_manifest_summary(const DatasetManifest& manifest, const std::filesystem::path& json_path);

}  // namespace dualtune
