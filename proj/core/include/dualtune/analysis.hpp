#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/numfmt.hpp"
#include "dualtune/scoring.hpp"

namespace dualtune {

// The four accuracy cells of one task, in percent.
struct ModeScores {
    double b_s = 0.0;   // base model, DirectAnswer evaluation
    double b_l = 0.0;   // base model, Thinking evaluation
    double dt_s = 0.0;  // dual-tuned model, DirectAnswer evaluation
    double dt_l = 0.0;  // dual-tuned model, Thinking evaluation

    void validate() const;  // throws if any cell is outside [0, 100]
};

// The five derived metrics.
//
//   GAP_B      = B_L - B_S                     (percentage points)
//   GAP_DT     = DT_L - DT_S                   (percentage points)
//   Gain_CoT   = 100 * (DT_L - best) / best    with best = max(B_L, B_S)
//   Gain_DA    = 100 * (DT_S - best) / best
//   Gain_token = 100 * Gain_CoT / N_token
//
// Gains are undefined when the base model's best score is zero; undefined
// values stay empty rather than dividing by zero.
struct DualTuningMetrics {
    double gap_b = 0.0;
    double gap_dt = 0.0;
    double base_best = 0.0;
    std::optional<double> gain_cot;
    std::optional<double> gain_da;
    std::optional<double> n_token;     // mean CoT output tokens
    std::optional<double> gain_token;

    bool defined() const { return gain_cot.has_value() && gain_da.has_value(); }
};

DualTuningMetrics compute_metrics(const ModeScores& scores,
                                  std::optional<double> n_token = std::nullopt);

std::optional<double> gain_token(const DualTuningMetrics& metrics, double n_token);

enum class Region { CoTAdvantage, DAAdvantage, BothBeneficial, Ineffective, Neutral };

std::string_view region_name(Region r);
std::optional<Region> parse_region(std::string_view name);

// A task sits inside the Thinking Boundary iff both Gain_CoT and GAP_DT
// clear epsilon (strict inequality, epsilon defaults to 0).
bool thinking_boundary(const DualTuningMetrics& metrics, double epsilon = 0.0);

// Gain-map region with fixed precedence: Ineffective (both gains <= eps),
// then Neutral (|GAP_DT| <= eps and |Gain_CoT - Gain_DA| <= eps), then
// CoTAdvantage, DAAdvantage, BothBeneficial; anything left is Neutral.
Region classify_region(const DualTuningMetrics& metrics, double epsilon = 0.0);

struct BoundaryVerdict {
    bool thinking_suitable = false;
    Region region = Region::Neutral;
    double epsilon = 0.0;
};

// nullopt when the metrics are undefined (indeterminate task).
std::optional<BoundaryVerdict> judge(const DualTuningMetrics& metrics, double epsilon = 0.0);

struct GainMapPoint {
    std::string task;
    double gain_da = 0.0;
    double gain_cot = 0.0;
    Region region = Region::Neutral;
};

struct GainMap {
    std::vector<GainMapPoint> points;          // ordered by task name
    std::vector<std::string> indeterminate;    // excluded tasks
};

GainMap gain_map(const std::map<std::string, DualTuningMetrics>& per_task, double epsilon = 0.0);

// Which Thinking-mode token averages feed N_token: the dual-tuned model
// only (default) or both models pooled.
enum class TokenPolicy { DualTunedThinking, BothModelsThinking };
std::string_view token_policy_name(TokenPolicy p);
std::optional<TokenPolicy> parse_token_policy(std::string_view name);

struct TaskAnalysis {
    std::string task;
    std::optional<ModeScores> scores;  // empty when a cell is missing
    DualTuningMetrics metrics;         // meaningful only when scores present
    std::optional<BoundaryVerdict> verdict;
    std::vector<std::string> notes;

    bool indeterminate() const { return !scores.has_value() || !verdict.has_value(); }
};

// Assembles per-task four-cell scores from aggregated rows and derives
// metrics and verdicts. Tasks with missing cells are kept, marked
// indeterminate, and annotated instead of aborting the run.
std::vector<TaskAnalysis> analyze_tasks(std::span<const TaskScore> cells, double epsilon,
                                        TokenPolicy token_policy = TokenPolicy::DualTunedThinking);

std::map<std::string, DualTuningMetrics> metrics_by_task(std::span<const TaskAnalysis> rows);

// Tab-separated metrics table, columns exactly:
// task, B_S, B_L, GAP_B, DT_S, DT_L, Gain_DA, Gain_CoT, GAP_DT, boundary, region
void write_metrics_table(std::span<const TaskAnalysis> rows, const std::filesystem::path& tsv_path);

// Full-precision gain-map data: task, Gain_DA, Gain_CoT, region.
void write_gain_map(const GainMap& map, const std::filesystem::path& tsv_path);

struct TokenGainRow {
    std::string task;
    double n_token = 0.0;
    double gain_token = 0.0;
};

std::vector<TokenGainRow> token_gain_rows(std::span<const TaskAnalysis> rows);
void write_token_gains(std::span<const TokenGainRow> rows, const std::filesystem::path& tsv_path);

}  // namespace dualtune
