#include "dualtune/modes.hpp"

namespace dualtune {

std::string_view mode_name(EvalMode mode) {
    return mode == EvalMode::Thinking ? "thinking" : "direct_answer";
}

std::string_view mode_data_tag(EvalMode mode) {
    return mode == EvalMode::Thinking ? "CoT" : "DA";
}

std::string_view role_name(ModelRole role) {
    return role == ModelRole::Base ? "base" : "dual_tuned";
}

std::string_view system_prompt_id(EvalMode mode) {
    return mode == EvalMode::Thinking ? kThinkingPromptId : kDirectAnswerPromptId;
}

std::optional<EvalMode> parse_mode(std::string_view name) {
    if (name == "thinking") return EvalMode::Thinking;
    if (name == "direct_answer") return EvalMode::DirectAnswer;
    return std::nullopt;
}

std::optional<EvalMode> parse_data_tag(std::string_view tag) {
    if (tag == "CoT") return EvalMode::Thinking;
    if (tag == "DA") return EvalMode::DirectAnswer;
    return std::nullopt;
}

std::optional<ModelRole> parse_role(std::string_view name) {
    if (name == "base") return ModelRole::Base;
    if (name == "dual_tuned") return ModelRole::DualTuned;
    return std::nullopt;
}

}  // namespace dualtune
