#pragma once

#include <optional>
#include <string_view>

namespace dualtune {

// The two inference modes every request, response and score cell is tagged
// with. Training data uses the matching CoT / DA rendition tags.
enum class EvalMode { Thinking, DirectAnswer };

// Which model produced a response: the untouched base model or the
// dual-tuned checkpoint trained on the paired CoT/DA mixture.
enum class ModelRole { Base, DualTuned };

std::string_view mode_name(EvalMode mode);        // "thinking" / "direct_answer"
std::string_view mode_data_tag(EvalMode mode);    // "CoT" / "DA"
std::string_view role_name(ModelRole role);       // "base" / "dual_tuned"

inline constexpr std::string_view kThinkingPromptId = "thinking";
inline constexpr std::string_view kDirectAnswerPromptId = "direct_answer";

// The registered system prompt id bound to a mode; manifest entries carry
// it so trainers pick the right prompt per rendition.
std::string_view system_prompt_id(EvalMode mode);

std::optional<EvalMode> parse_mode(std::string_view name);
std::optional<EvalMode> parse_data_tag(std::string_view tag);
std::optional<ModelRole> parse_role(std::string_view name);

}  // namespace dualtune
