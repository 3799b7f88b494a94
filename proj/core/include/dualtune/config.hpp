#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualtune/analysis.hpp"
#include "dualtune/corpus.hpp"
#include "dualtune/endpoint.hpp"
#include "dualtune/prompting.hpp"
#include "dualtune/scoring.hpp"

namespace dualtune {

struct RunConfig {
    std::vector<std::filesystem::path> corpus_paths;
    std::optional<std::filesystem::path> eval_set;
    std::filesystem::path output_root = "runs";
    std::optional<std::filesystem::path> cache_dir;  // default: <output_root>/cache

    std::optional<EndpointConfig> base_endpoint;
    std::optional<EndpointConfig> dual_tuned_endpoint;
    std::optional<EndpointConfig> grader_endpoint;

    SamplingConfig thinking_sampling = SamplingConfig::defaults_for(EvalMode::Thinking);
    SamplingConfig direct_answer_sampling = SamplingConfig::defaults_for(EvalMode::DirectAnswer);
    OptionsStyle options_style = OptionsStyle::LetterDot;

    WaitFilterPolicy wait_filter;
    ScoringPolicy scoring;
    double epsilon = 0.0;
    TokenPolicy token_policy = TokenPolicy::DualTunedThinking;

    std::optional<std::filesystem::path> task_order_path;
    std::optional<std::filesystem::path> task_groups_path;

    std::string run_id;  // computed from the config unless overridden

    const EndpointConfig& endpoint_for(ModelRole role) const;  // throws if unset
    std::filesystem::path resolved_cache_dir() const;
    std::filesystem::path run_dir() const;
};

// Parses the JSON config file and computes the run id. The id digests the
// canonical form of the semantic fields plus the content of referenced
// input files; formatting-only edits and output locations do not change it.
RunConfig load_run_config(const std::filesystem::path& path);

std::string compute_run_id(const RunConfig& config);

// sorted task names, one per line
std::vector<std::string> read_task_list(const std::filesystem::path& path);

// task<TAB>group lines
std::map<std::string, std::string> read_task_groups(const std::filesystem::path& path);

}  // namespace dualtune
