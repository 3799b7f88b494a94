#include "dualtune/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "dualtune/digest.hpp"
#include "dualtune/numfmt.hpp"
#include "io_util.hpp"

namespace dualtune {

using nlohmann::json;

std::string_view score_rule_name(ScoreRule r) {
    switch (r) {
        case ScoreRule::ChoiceExact: return "choice_exact";
        case ScoreRule::TextExact: return "text_exact";
        case ScoreRule::NumericMra: return "numeric_mra";
        case ScoreRule::NumericExact: return "numeric_exact";
        case ScoreRule::Grader: return "grader";
    }
    return "text_exact";
}

std::optional<ScoreRule> parse_score_rule(std::string_view name) {
    if (name == "choice_exact") return ScoreRule::ChoiceExact;
    if (name == "text_exact") return ScoreRule::TextExact;
    if (name == "numeric_mra") return ScoreRule::NumericMra;
    if (name == "numeric_exact") return ScoreRule::NumericExact;
    if (name == "grader") return ScoreRule::Grader;
    return std::nullopt;
}

double score_choice(const NormalizedAnswer& pred, std::string_view gold_letter) {
    if (!pred.choice_letter.has_value()) return 0.0;
    if (gold_letter.empty()) return 0.0;
    char gold = static_cast<char>(std::toupper(static_cast<unsigned char>(gold_letter[0])));
    return (*pred.choice_letter)[0] == gold ? 1.0 : 0.0;
}

std::vector<double> default_mra_thresholds() {
    std::vector<double> out;
    out.reserve(10);
    for (int k = 0; k < 10; ++k) out.push_back(0.50 + 0.05 * k);
    return out;
}

double score_numeric_mra(double pred, double gold) {
    if (gold == 0.0) {
        return pred == 0.0 ? 1.0 : 0.0;
    }
    double rel = std::abs(pred - gold) / std::abs(gold);
    // thresholds t_k = 0.50 + 0.05k for k in [0, 10); the strict test
    // rel < 1 - t_k holds iff k < 10 - 20*rel
    double passed = std::clamp(std::ceil(10.0 - 20.0 * rel), 0.0, 10.0);
    return passed / 10.0;
}

double score_numeric_mra(double pred, double gold, std::span<const double> thresholds) {
    if (thresholds.empty()) {
        throw std::invalid_argument("score_numeric_mra needs at least one threshold");
    }
    if (gold == 0.0) {
        return pred == 0.0 ? 1.0 : 0.0;
    }
    double rel = std::abs(pred - gold) / std::abs(gold);
    std::size_t passed = 0;
    for (double t : thresholds) {
        if (rel < 1.0 - t) ++passed;
    }
    return static_cast<double>(passed) / static_cast<double>(thresholds.size());
}

double score_numeric_exact(double pred, double gold, double tolerance) {
    return std::abs(pred - gold) <= tolerance ? 1.0 : 0.0;
}

double score_text_exact(const NormalizedAnswer& pred, std::string_view gold) {
    return pred.text == clean_text(gold) ? 1.0 : 0.0;
}

ScoreRule ScoringPolicy::rule_for(const RawTrace& trace) const {
    if (auto it = task_rules.find(trace.task_label); it != task_rules.end()) {
        return it->second;
    }
    switch (trace.answer_kind) {
        case AnswerKind::MultipleChoice: return ScoreRule::ChoiceExact;
        case AnswerKind::Numeric: return numeric_default;
        case AnswerKind::FreeText: return ScoreRule::TextExact;
    }
    return ScoreRule::TextExact;
}

ChoiceMatching ScoringPolicy::matching_for(const RawTrace& trace) const {
    if (auto it = task_choice_matching.find(trace.task_label); it != task_choice_matching.end()) {
        return it->second;
    }
    return choice_matching;
}

bool ScoringPolicy::needs_grader(std::span<const RawTrace> traces) const {
    return std::any_of(traces.begin(), traces.end(),
                       [&](const RawTrace& t) { return rule_for(t) == ScoreRule::Grader; });
}

GraderClient::GraderClient(GraderConfig config, Transport& transport,
                           std::filesystem::path cache_dir)
    : config_(std::move(config)), transport_(&transport), cache_dir_(std::move(cache_dir)) {
    config_.endpoint.validate();
}

std::optional<double> GraderClient::grade(std::string_view question, std::string_view gold,
                                          std::string_view pred) {
    ChatRequest request;
    request.system =
        "You are a strict grading assistant. Given a question, a reference answer and a "
        "candidate answer, decide whether the candidate answer is equivalent to the reference "
        "answer. Reply with exactly one word: YES or NO.";
    std::string user = "Question: ";
    user += question;
    user += "\nReference answer: ";
    user += gold;
    user += "\nCandidate answer: ";
    user += pred;
    request.user_parts.push_back(TextPart{std::move(user)});
    request.sampling.temperature = 0.0;
    request.sampling.max_output_tokens = 8;
    request.mode = EvalMode::DirectAnswer;
    request.sample_id = "grader:" + short_digest(std::string(question) + "\x1f" +
                                                 std::string(gold) + "\x1f" + std::string(pred));

    ResponseRecord record =
        send_with_cache(request, config_.endpoint, ModelRole::Base, cache_dir_, *transport_);
    if (!record.ok()) return std::nullopt;
    std::string verdict = clean_text(record.raw_text);
    if (verdict.starts_with("yes")) return 1.0;
    if (verdict.starts_with("no")) return 0.0;
    return std::nullopt;
}

ScoredSample score_sample(const RawTrace& trace, const ResponseRecord& record,
                          const ScoringPolicy& policy, GraderClient* grader) {
    ScoredSample out;
    if (!record.ok()) {
        out.exclusion = "transport_error: " + record.error->kind;
        return out;
    }

    out.parsed = extract_tags(record.raw_text, record.mode);
    TokenCount tokens = count_output_tokens(record);
    ScoreRule rule = policy.rule_for(trace);
    NormalizedAnswer norm = normalize_answer(out.parsed.answer_text, trace, policy.matching_for(trace));

    double score = 0.0;
    switch (rule) {
        case ScoreRule::ChoiceExact:
            score = score_choice(norm, trace.answer);
            break;
        case ScoreRule::TextExact:
            score = score_text_exact(norm, trace.answer);
            break;
        case ScoreRule::NumericMra:
        case ScoreRule::NumericExact: {
            auto gold = parse_double(trace.answer);
            if (!gold) {
                out.exclusion = "gold answer is not numeric: " + trace.answer;
                return out;
            }
            if (norm.value.has_value()) {
                score = rule == ScoreRule::NumericMra ? score_numeric_mra(*norm.value, *gold)
                                                      : score_numeric_exact(*norm.value, *gold);
            } else {
                score = score_text_exact(norm, trace.answer);
            }
            break;
        }
        case ScoreRule::Grader: {
            if (grader == nullptr) {
                throw std::logic_error("grader rule requested but no grader endpoint configured");
            }
            auto verdict = grader->grade(trace.question, trace.answer, out.parsed.answer_text);
            if (!verdict) {
                out.exclusion = "grader_failure";
                return out;
            }
            score = *verdict;
            break;
        }
    }

    if (policy.strict_format && record.mode == EvalMode::Thinking && !out.parsed.format_ok) {
        score = 0.0;
    }

    SampleScore sample;
    sample.sample_id = trace.id;
    sample.task_label = trace.task_label;
    sample.role = record.role;
    sample.mode = record.mode;
    sample.score = score;
    sample.rule = rule;
    sample.output_tokens = tokens.count;
    sample.tokens_approximate = tokens.approximate;
    sample.format_ok = out.parsed.format_ok;
    out.score = sample;
    return out;
}

std::vector<TaskScore> aggregate_task(std::span<const SampleScore> samples) {
    struct Acc {
        double score_sum = 0.0;
        double token_sum = 0.0;
        std::size_t n = 0;
        bool approximate = false;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Acc> groups;
    for (const auto& s : samples) {
        if (s.score < 0.0 || s.score > 1.0) {
            throw std::invalid_argument("sample score outside [0, 1] for " + s.sample_id);
        }
        auto key = std::make_tuple(s.task_label, std::string(role_name(s.role)),
                                   std::string(mode_name(s.mode)));
        Acc& acc = groups[key];
        acc.score_sum += s.score;
        acc.token_sum += static_cast<double>(s.output_tokens);
        acc.approximate = acc.approximate || s.tokens_approximate;
        ++acc.n;
    }
    std::vector<TaskScore> out;
    out.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        TaskScore t;
        t.task_label = std::get<0>(key);
        t.role = *parse_role(std::get<1>(key));
        t.mode = *parse_mode(std::get<2>(key));
        t.mean_score_pct = 100.0 * acc.score_sum / static_cast<double>(acc.n);
        t.n_samples = acc.n;
        t.mean_output_tokens = acc.token_sum / static_cast<double>(acc.n);
        t.tokens_approximate = acc.approximate;
        out.push_back(std::move(t));
    }
    return out;
}

void write_sample_scores(std::span<const SampleScore> scores, const std::filesystem::path& jsonl_path) {
    std::string body;
    for (const auto& s : scores) {
        json j{
            {"sample_id", s.sample_id},
            {"task_label", s.task_label},
            {"role", std::string(role_name(s.role))},
            {"mode", std::string(mode_name(s.mode))},
            {"score", s.score},
            {"rule", std::string(score_rule_name(s.rule))},
            {"output_tokens", s.output_tokens},
            {"tokens_approximate", s.tokens_approximate},
            {"format_ok", s.format_ok},
        };
        body += j.dump();
        body.push_back('\n');
    }
    io::write_file_atomic(jsonl_path, body);
}

std::vector<SampleScore> read_sample_scores(const std::filesystem::path& jsonl_path) {
    std::vector<SampleScore> out;
    for (const auto& line : io::read_numbered_lines(jsonl_path)) {
        if (io::is_blank(line.text)) continue;
        json j = json::parse(line.text);
        SampleScore s;
        s.sample_id = j.at("sample_id").get<std::string>();
        s.task_label = j.at("task_label").get<std::string>();
        s.role = *parse_role(j.at("role").get<std::string>());
        s.mode = *parse_mode(j.at("mode").get<std::string>());
        s.score = j.at("score").get<double>();
        s.rule = *parse_score_rule(j.at("rule").get<std::string>());
        s.output_tokens = j.at("output_tokens").get<std::int64_t>();
        s.tokens_approximate = j.at("tokens_approximate").get<bool>();
        s.format_ok = j.at("format_ok").get<bool>();
        out.push_back(std::move(s));
    }
    return out;
}

void write_task_scores(std::span<const TaskScore> scores, const std::filesystem::path& tsv_path) {
    std::string body = "task\trole\tmode\tscore_pct\tn\tmean_tokens\n";
    for (const auto& t : scores) {
        body += io::join_tsv({t.task_label, std::string(role_name(t.role)),
                              std::string(mode_name(t.mode)), format_shortest(t.mean_score_pct),
                              std::to_string(t.n_samples),
                              t.mean_output_tokens ? format_shortest(*t.mean_output_tokens) : "-"});
        body.push_back('\n');
    }
    io::write_file_atomic(tsv_path, body);
}

std::vector<TaskScore> read_task_scores(const std::filesystem::path& tsv_path) {
    auto lines = io::read_numbered_lines(tsv_path);
    if (lines.empty()) {
        throw std::runtime_error("empty score table: " + tsv_path.string());
    }
    auto header = io::split_tsv(lines.front().text);
    if (header.size() < 4 || header[0] != "task" || header[1] != "role" || header[2] != "mode" ||
        header[3] != "score_pct") {
        throw std::runtime_error("unexpected score table header in " + tsv_path.string());
    }
    std::vector<TaskScore> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (io::is_blank(lines[i].text)) continue;
        auto fields = io::split_tsv(lines[i].text);
        std::string context = tsv_path.string() + ":" + std::to_string(lines[i].number);
        if (fields.size() < 4) {
            throw std::runtime_error(context + ": expected at least 4 columns");
        }
        TaskScore t;
        t.task_label = fields[0];
        auto role = parse_role(fields[1]);
        auto mode = parse_mode(fields[2]);
        auto pct = parse_double(fields[3]);
        if (!role || !mode || !pct) {
            throw std::runtime_error(context + ": bad role/mode/score_pct");
        }
        t.role = *role;
        t.mode = *mode;
        t.mean_score_pct = *pct;
        if (fields.size() > 4 && fields[4] != "-" && !fields[4].empty()) {
            t.n_samples = static_cast<std::size_t>(std::stoull(fields[4]));
        }
        if (fields.size() > 5 && fields[5] != "-" && !fields[5].empty()) {
            auto tokens = parse_double(fields[5]);
            if (!tokens) {
                throw std::runtime_error(context + ": bad mean_tokens");
            }
            t.mean_output_tokens = *tokens;
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace dualtune
