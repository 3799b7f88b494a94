#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/corpus.hpp"
#include "dualtune/endpoint.hpp"
#include "dualtune/extraction.hpp"
#include "dualtune/modes.hpp"

namespace dualtune {

enum class ScoreRule { ChoiceExact, TextExact, NumericMra, NumericExact, Grader };

std::string_view score_rule_name(ScoreRule r);
std::optional<ScoreRule> parse_score_rule(std::string_view name);

struct SampleScore {
    std::string sample_id;
    std::string task_label;
    ModelRole role = ModelRole::Base;
    EvalMode mode = EvalMode::DirectAnswer;
    double score = 0.0;  // in [0, 1]
    ScoreRule rule = ScoreRule::TextExact;
    std::int64_t output_tokens = 0;
    bool tokens_approximate = false;
    bool format_ok = true;
};

// One aggregated accuracy cell. The four cells of a task are
// (Base, DirectAnswer), (Base, Thinking), (DualTuned, DirectAnswer),
// (DualTuned, Thinking).
struct TaskScore {
    std::string task_label;
    ModelRole role = ModelRole::Base;
    EvalMode mode = EvalMode::DirectAnswer;
    double mean_score_pct = 0.0;  // 100 x mean sample score
    std::size_t n_samples = 0;
    std::optional<double> mean_output_tokens;
    bool tokens_approximate = false;
};

double score_choice(const NormalizedAnswer& pred, std::string_view gold_letter);

// Mean relative accuracy over the default confidence grid
// {0.50, 0.55, ..., 0.95}: the fraction of thresholds t with
// |pred - gold| / |gold| < 1 - t. Closed form; gold = 0 falls back to
// exact equality.
double score_numeric_mra(double pred, double gold);

// Same score over an explicit threshold set, evaluated one threshold at a
// time. The default-grid closed form above must agree with this loop.
double score_numeric_mra(double pred, double gold, std::span<const double> thresholds);

std::vector<double> default_mra_thresholds();

double score_numeric_exact(double pred, double gold, double tolerance = 1e-6);

double score_text_exact(const NormalizedAnswer& pred, std::string_view gold);

struct ScoringPolicy {
    std::map<std::string, ScoreRule> task_rules;  // per-task overrides
    ScoreRule numeric_default = ScoreRule::NumericMra;
    ChoiceMatching choice_matching = ChoiceMatching::Strict;
    std::map<std::string, ChoiceMatching> task_choice_matching;  // per-task overrides
    // Rigid-matching emulation: format-violating Thinking responses score 0.
    bool strict_format = false;

    ScoreRule rule_for(const RawTrace& trace) const;
    ChoiceMatching matching_for(const RawTrace& trace) const;
    bool needs_grader(std::span<const RawTrace> traces) const;
};

class Transport;

struct GraderConfig {
    EndpointConfig endpoint;
};

// Delegates answer-equivalence judgment to a judge endpoint that replies
// YES or NO. Verdicts are cached like any endpoint response.
class GraderClient {
  public:
    GraderClient(GraderConfig config, Transport& transport, std::filesystem::path cache_dir);

    // nullopt on transport failure or an unparseable verdict; callers must
    // exclude the sample, never default the score.
    std::optional<double> grade(std::string_view question, std::string_view gold,
                                std::string_view pred);

  private:
    GraderConfig config_;
    Transport* transport_;
    std::filesystem::path cache_dir_;
};

struct ScoredSample {
    std::optional<SampleScore> score;          // empty iff excluded
    std::optional<std::string> exclusion;      // reason when excluded
    ParsedResponse parsed;
};

// Scores one response record against its trace. Transport-error records
// and grader failures are excluded with a reason rather than scored.
// Throws std::logic_error if a grader rule applies and grader is null;
// callers validate grader configuration up front.
ScoredSample score_sample(const RawTrace& trace, const ResponseRecord& record,
                          const ScoringPolicy& policy, GraderClient* grader = nullptr);

// Mean score and token statistics per (task_label, role, mode), sorted by
// that key.
std::vector<TaskScore> aggregate_task(std::span<const SampleScore> samples);

void write_sample_scores(std::span<const SampleScore> scores, const std::filesystem::path& jsonl_path);
std::vector<SampleScore> read_sample_scores(const std::filesystem::path& jsonl_path);

// Tab-separated summary with columns: task, role, mode, score_pct, n,
// mean_tokens. Reading tolerates "-" for the optional columns so externally
// produced tables (published results, other harnesses) can drive analysis.
void write_task_scores(std::span<const TaskScore> scores, const std::filesystem::path& tsv_path);
std::vector<TaskScore> read_task_scores(const std::filesystem::path& tsv_path);

}  // namespace dualtune
