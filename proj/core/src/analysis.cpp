#include "dualtune/analysis.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "io_util.hpp"

namespace dualtune {

void ModeScores::validate() const {
    for (double v : {b_s, b_l, dt_s, dt_l}) {
        if (!std::isfinite(v) || v < 0.0 || v > 100.0) {
            throw std::invalid_argument("score cell outside [0, 100]");
        }
    }
}

DualTuningMetrics compute_metrics(const ModeScores& scores, std::optional<double> n_token) {
    scores.validate();
    DualTuningMetrics m;
    m.gap_b = scores.b_l - scores.b_s;
    m.gap_dt = scores.dt_l - scores.dt_s;
    m.base_best = std::max(scores.b_l, scores.b_s);
    if (m.base_best > 0.0) {
        m.gain_cot = 100.0 * (scores.dt_l - m.base_best) / m.base_best;
        m.gain_da = 100.0 * (scores.dt_s - m.base_best) / m.base_best;
    }
    m.n_token = n_token;
    if (m.gain_cot && n_token) {
        m.gain_token = gain_token(m, *n_token);
    }
    return m;
}

std::optional<double> gain_token(const DualTuningMetrics& metrics, double n_token) {
    if (!metrics.gain_cot.has_value() || n_token <= 0.0) {
        return std::nullopt;
    }
    return 100.0 * *metrics.gain_cot / n_token;
}

std::string_view region_name(Region r) {
    switch (r) {
        case Region::CoTAdvantage: return "cot_advantage";
        case Region::DAAdvantage: return "da_advantage";
        case Region::BothBeneficial: return "both_beneficial";
        case Region::Ineffective: return "ineffective";
        case Region::Neutral: return "neutral";
    }
    return "neutral";
}

std::optional<Region> parse_region(std::string_view name) {
    if (name == "cot_advantage") return Region::CoTAdvantage;
    if (name == "da_advantage") return Region::DAAdvantage;
    if (name == "both_beneficial") return Region::BothBeneficial;
    if (name == "ineffective") return Region::Ineffective;
    if (name == "neutral") return Region::Neutral;
    return std::nullopt;
}

bool thinking_boundary(const DualTuningMetrics& metrics, double epsilon) {
    if (!metrics.defined()) {
        throw std::invalid_argument("thinking_boundary needs defined gains");
    }
    return *metrics.gain_cot > epsilon && metrics.gap_dt > epsilon;
}

Region classify_region(const DualTuningMetrics& metrics, double epsilon) {
    if (!metrics.defined()) {
        throw std::invalid_argument("classify_region needs defined gains");
    }
    double gc = *metrics.gain_cot;
    double gd = *metrics.gain_da;
    double gap = metrics.gap_dt;
    if (gc <= epsilon && gd <= epsilon) return Region::Ineffective;
    if (std::abs(gap) <= epsilon && std::abs(gc - gd) <= epsilon) return Region::Neutral;
    if (gap > epsilon && gc > epsilon) return Region::CoTAdvantage;
    if (gap < -epsilon && gd > epsilon) return Region::DAAdvantage;
    if (gc > epsilon && gd > epsilon) return Region::BothBeneficial;
    return Region::Neutral;
}

std::optional<BoundaryVerdict> judge(const DualTuningMetrics& metrics, double epsilon) {
    if (!metrics.defined()) return std::nullopt;
    BoundaryVerdict v;
    v.thinking_suitable = thinking_boundary(metrics, epsilon);
    v.region = classify_region(metrics, epsilon);
    v.epsilon = epsilon;
    return v;
}

GainMap gain_map(const std::map<std::string, DualTuningMetrics>& per_task, double epsilon) {
    GainMap map;
    for (const auto& [task, metrics] : per_task) {
        if (!metrics.defined()) {
            map.indeterminate.push_back(task);
            continue;
        }
        map.points.push_back({task, *metrics.gain_da, *metrics.gain_cot,
                              classify_region(metrics, epsilon)});
    }
    return map;
}

std::string_view token_policy_name(TokenPolicy p) {
    return p == TokenPolicy::DualTunedThinking ? "dual_tuned_thinking" : "both_models_thinking";
}

std::optional<TokenPolicy> parse_token_policy(std::string_view name) {
    if (name == "dual_tuned_thinking") return TokenPolicy::DualTunedThinking;
    if (name == "both_models_thinking") return TokenPolicy::BothModelsThinking;
    return std::nullopt;
}

namespace {

constexpr std::size_t cell_index(ModelRole role, EvalMode mode) {
    return (role == ModelRole::DualTuned ? 2u : 0u) + (mode == EvalMode::Thinking ? 1u : 0u);
}

constexpr std::array<std::string_view, 4> kCellNames = {
    "base/direct_answer", "base/thinking", "dual_tuned/direct_answer", "dual_tuned/thinking"};

struct TokenMean {
    std::optional<double> mean;
    bool approximate = false;
};

TokenMean token_mean(const std::array<std::optional<TaskScore>, 4>& cells, TokenPolicy policy) {
    const auto& dt = cells[cell_index(ModelRole::DualTuned, EvalMode::Thinking)];
    const auto& base = cells[cell_index(ModelRole::Base, EvalMode::Thinking)];
    TokenMean out;
    if (policy == TokenPolicy::DualTunedThinking) {
        if (dt && dt->mean_output_tokens) {
            out.mean = dt->mean_output_tokens;
            out.approximate = dt->tokens_approximate;
        }
        return out;
    }
    // pooled across both models' Thinking rows, weighted by sample count
    // when available
    double token_sum = 0.0;
    double weight_sum = 0.0;
    for (const auto* cell : {&base, &dt}) {
        if (!*cell || !(*cell)->mean_output_tokens) continue;
        double w = (*cell)->n_samples > 0 ? static_cast<double>((*cell)->n_samples) : 1.0;
        token_sum += w * *(*cell)->mean_output_tokens;
        weight_sum += w;
        out.approximate = out.approximate || (*cell)->tokens_approximate;
    }
    if (weight_sum > 0.0) out.mean = token_sum / weight_sum;
    return out;
}

}  // namespace

std::vector<TaskAnalysis> analyze_tasks(std::span<const TaskScore> cells, double epsilon,
                                        TokenPolicy token_policy) {
    std::map<std::string, std::array<std::optional<TaskScore>, 4>> by_task;
    for (const auto& cell : cells) {
        auto& slot = by_task[cell.task_label][cell_index(cell.role, cell.mode)];
        if (slot.has_value()) {
            throw std::invalid_argument("duplicate score cell for task " + cell.task_label +
                                        " (" + std::string(role_name(cell.role)) + ", " +
                                        std::string(mode_name(cell.mode)) + ")");
        }
        slot = cell;
    }

    std::vector<TaskAnalysis> out;
    out.reserve(by_task.size());
    for (const auto& [task, slots] : by_task) {
        TaskAnalysis row;
        row.task = task;
        std::vector<std::string> missing;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i].has_value()) missing.emplace_back(kCellNames[i]);
        }
        if (!missing.empty()) {
            for (auto& cell : missing) row.notes.push_back("missing cell: " + cell);
            out.push_back(std::move(row));
            continue;
        }
        ModeScores scores;
        scores.b_s = slots[cell_index(ModelRole::Base, EvalMode::DirectAnswer)]->mean_score_pct;
        scores.b_l = slots[cell_index(ModelRole::Base, EvalMode::Thinking)]->mean_score_pct;
        scores.dt_s = slots[cell_index(ModelRole::DualTuned, EvalMode::DirectAnswer)]->mean_score_pct;
        scores.dt_l = slots[cell_index(ModelRole::DualTuned, EvalMode::Thinking)]->mean_score_pct;
        row.scores = scores;
        TokenMean tokens = token_mean(slots, token_policy);
        row.metrics = compute_metrics(scores, tokens.mean);
        row.verdict = judge(row.metrics, epsilon);
        if (!row.verdict) {
            row.notes.push_back("gains undefined: base model best score is 0");
        }
        if (tokens.approximate) {
            row.notes.push_back("N_token from approximate (word-count) token totals");
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::map<std::string, DualTuningMetrics> metrics_by_task(std::span<const TaskAnalysis> rows) {
    std::map<std::string, DualTuningMetrics> out;
    for (const auto& row : rows) {
        if (row.scores.has_value()) {
            out.emplace(row.task, row.metrics);
        }
    }
    return out;
}

namespace {

std::string boundary_label(const TaskAnalysis& row) {
    if (!row.verdict) return "indeterminate";
    return row.verdict->thinking_suitable ? "suitable" : "not_suitable";
}

std::string region_label(const TaskAnalysis& row) {
    if (!row.verdict) return "indeterminate";
    return std::string(region_name(row.verdict->region));
}

}  // namespace

void write_metrics_table(std::span<const TaskAnalysis> rows, const std::filesystem::path& tsv_path) {
    std::string body =
        "task\tB_S\tB_L\tGAP_B\tDT_S\tDT_L\tGain_DA\tGain_CoT\tGAP_DT\tboundary\tregion\n";
    for (const auto& row : rows) {
        std::vector<std::string> fields(11, "-");
        fields[0] = row.task;
        if (row.scores) {
            const auto& s = *row.scores;
            const auto& m = row.metrics;
            fields[1] = format_2dp(s.b_s);
            fields[2] = format_2dp(s.b_l);
            fields[3] = format_2dp(m.gap_b);
            fields[4] = format_2dp(s.dt_s);
            fields[5] = format_2dp(s.dt_l);
            if (m.gain_da) fields[6] = format_2dp(*m.gain_da);
            if (m.gain_cot) fields[7] = format_2dp(*m.gain_cot);
            fields[8] = format_2dp(m.gap_dt);
        }
        fields[9] = boundary_label(row);
        fields[10] = region_label(row);
        body += io::join_tsv(fields);
        body.push_back('\n');
    }
    io::write_file_atomic(tsv_path, body);
}

void write_gain_map(const GainMap& map, const std::filesystem::path& tsv_path) {
    std::string body = "task\tGain_DA\tGain_CoT\tregion\n";
    for (const auto& p : map.points) {
        body += io::join_tsv({p.task, format_shortest(p.gain_da), format_shortest(p.gain_cot),
                              std::string(region_name(p.region))});
        body.push_back('\n');
    }
    io::write_file_atomic(tsv_path, body);
}

std::vector<TokenGainRow> token_gain_rows(std::span<const TaskAnalysis> rows) {
    std::vector<TokenGainRow> out;
    for (const auto& row : rows) {
        if (row.metrics.n_token && row.metrics.gain_token) {
            out.push_back({row.task, *row.metrics.n_token, *row.metrics.gain_token});
        }
    }
    return out;
}

void write_token_gains(std::span<const TokenGainRow> rows, const std::filesystem::path& tsv_path) {
    std::string body = "task\tN_token\tGain_token\n";
    for (const auto& row : rows) {
        body += io::join_tsv({row.task, format_shortest(row.n_token),
                              format_shortest(row.gain_token)});
        body.push_back('\n');
    }
    io::write_file_atomic(tsv_path, body);
}

}  // namespace dualtune
