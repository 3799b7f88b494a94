#include "dualtune/prompting.hpp"

#include <stdexcept>

#include "dualtune/digest.hpp"

namespace dualtune {

namespace {

// Frozen SHA-256 digests of the registered prompts. verify_registered_prompts
// fails if either string drifts from the value documented in the README.
constexpr std::string_view kThinkingPromptSha256 =
    "b9cf6e7364cf0a0c0e87ae0324e83326dfdffd7265fc8f9f5536dd2bc484dc89";
constexpr std::string_view kDirectAnswerPromptSha256 =
    "9d79501627cc51a92f0cb4e1d196cc08972e12ed1bccd606ab8487fd063c1264";

}  // namespace

std::string_view system_prompt(EvalMode mode) {
    return mode == EvalMode::Thinking ? kThinkingSystemPrompt : kDirectAnswerSystemPrompt;
}

std::string prompt_digest(EvalMode mode) {
    return sha256_hex(system_prompt(mode));
}

bool verify_registered_prompts() {
    return prompt_digest(EvalMode::Thinking) == kThinkingPromptSha256 &&
           prompt_digest(EvalMode::DirectAnswer) == kDirectAnswerPromptSha256;
}

SamplingConfig SamplingConfig::defaults_for(EvalMode mode) {
    SamplingConfig s;
    s.temperature = 0.0;
    s.max_output_tokens = mode == EvalMode::Thinking ? 4096 : 512;
    return s;
}

std::string_view options_style_name(OptionsStyle s) {
    return s == OptionsStyle::Parenthesized ? "parenthesized" : "letter_dot";
}

std::optional<OptionsStyle> parse_options_style(std::string_view name) {
    if (name == "letter_dot") return OptionsStyle::LetterDot;
    if (name == "parenthesized") return OptionsStyle::Parenthesized;
    return std::nullopt;
}

std::string render_question_text(const RawTrace& sample, OptionsStyle options_style) {
    std::string text = sample.question;
    if (sample.answer_kind == AnswerKind::MultipleChoice) {
        for (const auto& choice : sample.choices) {
            text.push_back('\n');
            if (options_style == OptionsStyle::Parenthesized) {
                text.push_back('(');
                text += choice.letter;
                text += ") ";
            } else {
                text += choice.letter;
                text += ". ";
            }
            text += choice.text;
        }
    }
    return text;
}

ChatRequest assemble_request(const RawTrace& sample, EvalMode mode, const SamplingConfig& sampling,
                             OptionsStyle options_style) {
    if (sample.question.empty()) {
        throw std::invalid_argument("sample " + sample.id + " has an empty question");
    }
    if (sample.answer_kind == AnswerKind::MultipleChoice && sample.choices.empty()) {
        throw std::invalid_argument("sample " + sample.id + " is multiple_choice without choices");
    }
    ChatRequest request;
    request.system = std::string(system_prompt(mode));
    request.mode = mode;
    request.sample_id = sample.id;
    request.sampling = sampling;
    request.user_parts.reserve(sample.media.size() + 1);
    for (const auto& uri : sample.media) {
        request.user_parts.push_back(MediaPart{uri, sample.modality});
    }
    request.user_parts.push_back(TextPart{render_question_text(sample, options_style)});
    return request;
}

}  // namespace dualtune
