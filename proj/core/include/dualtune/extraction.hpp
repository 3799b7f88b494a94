#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/corpus.hpp"
#include "dualtune/endpoint.hpp"
#include "dualtune/modes.hpp"

namespace dualtune {

enum class Violation {
    MissingThink,
    MissingAnswer,
    MultipleAnswerTags,
    TextOutsideTags,
    NestedTags,
};

std::string_view violation_name(Violation v);

struct ParsedResponse {
    std::optional<std::string> thinking;  // first think block, Thinking mode only
    std::string answer_text;              // always populated for non-empty input
    bool format_ok = true;
    std::vector<Violation> violations;    // sorted, no duplicates
};

// Total function: malformed output degrades into fallbacks plus recorded
// violations, never an error. Thinking mode expects the tag grammar;
// DirectAnswer mode expects bare text and flags tag leakage.
ParsedResponse extract_tags(std::string_view raw, EvalMode mode);

enum class NormalKind { Choice, Number, Text };

struct NormalizedAnswer {
    NormalKind kind = NormalKind::Text;
    std::optional<std::string> choice_letter;  // single uppercase letter
    std::optional<double> value;
    std::optional<std::string> unit;  // single token following the number
    std::string text;                 // trimmed, whitespace-collapsed, lowercased
};

// How hard to look for a choice letter in verbose output. Strict uses the
// anchored patterns only; Lenient additionally accepts a unique whole-word
// letter token anywhere in the text.
enum class ChoiceMatching { Strict, Lenient };

NormalizedAnswer normalize_answer(std::string_view answer_text, const RawTrace& trace,
                                  ChoiceMatching matching = ChoiceMatching::Strict);

// Lowercase + trim + collapse runs of whitespace. Idempotent.
std::string clean_text(std::string_view text);

struct TokenCount {
    std::int64_t count = 0;
    bool approximate = false;  // whitespace word count, endpoint gave no usage
};

TokenCount count_output_tokens(std::optional<std::int64_t> reported, std::string_view raw_text);
TokenCount count_output_tokens(const ResponseRecord& record);

// Violation counts per (task, mode); the machine-readable format report.
struct ViolationSummary {
    std::map<std::string, std::map<EvalMode, std::map<Violation, std::size_t>>> counts;

    void add(const std::string& task, EvalMode mode, const std::vector<Violation>& violations);
};

void write_violation_summary(const ViolationSummary& summary, const std::filesystem::path& json_path);

}  // namespace dualtune
