#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dualtune/corpus.hpp"
#include "dualtune/modes.hpp"

namespace dualtune {

// The two registered system prompts. These strings are part of the
// protocol: scoring assumes responses were produced under exactly these
// instructions, so they are frozen and digest-checked (see
// verify_registered_prompts).
inline constexpr std::string_view kThinkingSystemPrompt =
    "When the user asks a question, your response must include two parts: "
    "first, the reasoning process enclosed in <think>...</think> tags, then "
    "the final answer enclosed in <answer>...</answer> tags.";

inline constexpr std::string_view kDirectAnswerSystemPrompt =
    "Please directly answer the following question.";

std::string_view system_prompt(EvalMode mode);

// SHA-256 of the registered prompt text.
std::string prompt_digest(EvalMode mode);

// Self-test against the frozen digests; returns false if either prompt
// string drifted.
bool verify_registered_prompts();

struct SamplingConfig {
    std::optional<double> temperature;
    std::optional<int> max_output_tokens;
    std::optional<std::uint64_t> seed;

    // temperature 0 for reproducible scoring; generous token budget in
    // Thinking mode, small in DirectAnswer
    static SamplingConfig defaults_for(EvalMode mode);
};

// How multiple-choice options render in the user turn: "A. text" lines
// (the common harness convention) or "(A) text" lines.
enum class OptionsStyle { LetterDot, Parenthesized };

std::string_view options_style_name(OptionsStyle s);
std::optional<OptionsStyle> parse_options_style(std::string_view name);

struct TextPart {
    std::string text;
};

struct MediaPart {
    std::string uri;
    Modality modality = Modality::Image;
};

using UserPart = std::variant<TextPart, MediaPart>;

struct ChatRequest {
    std::string system;
    std::vector<UserPart> user_parts;
    SamplingConfig sampling;
    EvalMode mode = EvalMode::DirectAnswer;
    std::string sample_id;
};

// Media references in corpus order, then the question text; multiple-choice
// traces get an options block appended to the question. Throws
// std::invalid_argument for an MCQ trace without choices.
ChatRequest assemble_request(const RawTrace& sample, EvalMode mode, const SamplingConfig& sampling,
                             OptionsStyle options_style = OptionsStyle::LetterDot);

// The question text part of the user turn (question plus options block).
std::string render_question_text(const RawTrace& sample,
                                 OptionsStyle options_style = OptionsStyle::LetterDot);

}  // namespace dualtune
