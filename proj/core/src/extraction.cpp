#include "dualtune/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "io_util.hpp"

namespace dualtune {

using nlohmann::json;

namespace {

struct TagBlock {
    std::size_t open_pos = 0;       // offset of the opening tag
    std::size_t content_begin = 0;  // first content char
    std::size_t content_end = 0;    // one past last content char
    std::size_t close_end = 0;      // one past the closing tag
};

// Sequential non-overlapping scan for <open>...<close> blocks.
std::vector<TagBlock> scan_blocks(std::string_view text, std::string_view open,
                                  std::string_view close, std::size_t base_offset = 0) {
    std::vector<TagBlock> blocks;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open_pos = text.find(open, pos);
        if (open_pos == std::string_view::npos) break;
        std::size_t content_begin = open_pos + open.size();
        std::size_t close_pos = text.find(close, content_begin);
        if (close_pos == std::string_view::npos) break;
        blocks.push_back({base_offset + open_pos, base_offset + content_begin,
                          base_offset + close_pos, base_offset + close_pos + close.size()});
        pos = close_pos + close.size();
    }
    return blocks;
}

std::string_view trim(std::string_view s) {
    std::size_t begin = 0;
    while (begin < s.size() && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    std::size_t end = s.size();
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

void add_violation(std::vector<Violation>& violations, Violation v) {
    if (std::find(violations.begin(), violations.end(), v) == violations.end()) {
        violations.push_back(v);
    }
}

bool nonspace_outside_spans(std::string_view raw, const std::vector<TagBlock>& blocks) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    spans.reserve(blocks.size());
    for (const auto& b : blocks) spans.emplace_back(b.open_pos, b.close_end);
    std::sort(spans.begin(), spans.end());
    std::size_t pos = 0;
    auto has_nonspace = [&](std::size_t from, std::size_t to) {
        for (std::size_t i = from; i < to; ++i) {
            if (!std::isspace(static_cast<unsigned char>(raw[i]))) return true;
        }
        return false;
    };
    for (const auto& [begin, end] : spans) {
        if (has_nonspace(pos, begin)) return true;
        pos = std::max(pos, end);
    }
    return has_nonspace(pos, raw.size());
}

}  // namespace

std::string_view violation_name(Violation v) {
    switch (v) {
        case Violation::MissingThink: return "missing_think";
        case Violation::MissingAnswer: return "missing_answer";
        case Violation::MultipleAnswerTags: return "multiple_answer_tags";
        case Violation::TextOutsideTags: return "text_outside_tags";
        case Violation::NestedTags: return "nested_tags";
    }
    return "unknown";
}

ParsedResponse extract_tags(std::string_view raw, EvalMode mode) {
    ParsedResponse parsed;

    if (mode == EvalMode::DirectAnswer) {
        // Bare text expected. Tags leaking from CoT training are flagged and
        // the answer block content is preferred over the verbose wrapper.
        auto answer_blocks = scan_blocks(raw, kAnswerOpenTag, kAnswerCloseTag);
        auto think_blocks = scan_blocks(raw, kThinkOpenTag, kThinkCloseTag);
        if (!answer_blocks.empty()) {
            add_violation(parsed.violations, Violation::TextOutsideTags);
            if (answer_blocks.size() > 1) {
                add_violation(parsed.violations, Violation::MultipleAnswerTags);
            }
            const TagBlock& last = answer_blocks.back();
            parsed.answer_text = std::string(raw.substr(last.content_begin,
                                                        last.content_end - last.content_begin));
        } else if (!think_blocks.empty()) {
            add_violation(parsed.violations, Violation::TextOutsideTags);
            std::string_view tail = trim(raw.substr(think_blocks.back().close_end));
            parsed.answer_text = std::string(tail.empty() ? trim(raw) : tail);
        } else {
            parsed.answer_text = std::string(raw);
        }
        if (parsed.answer_text.empty() && !raw.empty()) {
            std::string_view fallback = trim(raw);
            parsed.answer_text = std::string(fallback.empty() ? raw : fallback);
        }
        parsed.format_ok = parsed.violations.empty();
        return parsed;
    }

    // Thinking mode: first think block wins; answer blocks are searched
    // after the last think block so reasoning that merely mentions the tags
    // does not hijack extraction.
    auto think_blocks = scan_blocks(raw, kThinkOpenTag, kThinkCloseTag);
    std::size_t answer_region_begin = 0;
    if (think_blocks.empty()) {
        add_violation(parsed.violations, Violation::MissingThink);
    } else {
        const TagBlock& first = think_blocks.front();
        parsed.thinking = std::string(raw.substr(first.content_begin,
                                                 first.content_end - first.content_begin));
        if (parsed.thinking->find(kThinkOpenTag) != std::string::npos) {
            add_violation(parsed.violations, Violation::NestedTags);
        }
        answer_region_begin = think_blocks.back().close_end;
    }

    auto answer_blocks = scan_blocks(raw.substr(answer_region_begin), kAnswerOpenTag,
                                     kAnswerCloseTag, answer_region_begin);
    if (answer_blocks.empty()) {
        add_violation(parsed.violations, Violation::MissingAnswer);
        std::string_view tail = trim(raw.substr(answer_region_begin));
        parsed.answer_text = std::string(tail.empty() ? raw : tail);
    } else {
        if (answer_blocks.size() > 1) {
            add_violation(parsed.violations, Violation::MultipleAnswerTags);
        }
        const TagBlock& last = answer_blocks.back();
        parsed.answer_text = std::string(raw.substr(last.content_begin,
                                                    last.content_end - last.content_begin));
        if (parsed.answer_text.find(kAnswerOpenTag) != std::string::npos) {
            add_violation(parsed.violations, Violation::NestedTags);
        }
        std::vector<TagBlock> all = think_blocks;
        all.insert(all.end(), answer_blocks.begin(), answer_blocks.end());
        if (nonspace_outside_spans(raw, all)) {
            add_violation(parsed.violations, Violation::TextOutsideTags);
        }
    }

    if (parsed.answer_text.empty() && !raw.empty()) {
        std::string_view fallback = trim(raw);
        parsed.answer_text = std::string(fallback.empty() ? raw : fallback);
    }
    std::sort(parsed.violations.begin(), parsed.violations.end());
    parsed.format_ok = parsed.violations.empty();
    return parsed;
}

std::string clean_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

namespace {

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::optional<std::string> match_choice_letter(std::string_view text,
                                               const std::vector<Choice>& choices,
                                               ChoiceMatching matching) {
    auto valid = [&](char c) -> std::optional<std::string> {
        char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        for (const auto& choice : choices) {
            if (!choice.letter.empty() && choice.letter[0] == upper) {
                return std::string(1, upper);
            }
        }
        return std::nullopt;
    };

    std::string_view t = trim(text);
    if (t.empty()) return std::nullopt;

    // 1. the whole reply is a single letter
    if (t.size() == 1 && std::isalpha(static_cast<unsigned char>(t[0]))) {
        if (auto letter = valid(t[0])) return letter;
    }
    // 2. first parenthesized letter anywhere: (X)
    for (std::size_t i = 0; i + 2 < t.size(); ++i) {
        if (t[i] == '(' && std::isalpha(static_cast<unsigned char>(t[i + 1])) && t[i + 2] == ')') {
            if (auto letter = valid(t[i + 1])) return letter;
        }
    }
    // 3. leading "X."
    if (t.size() >= 2 && std::isalpha(static_cast<unsigned char>(t[0])) && t[1] == '.') {
        if (auto letter = valid(t[0])) return letter;
    }
    // 4. full option-text match
    std::string cleaned = clean_text(t);
    for (const auto& choice : choices) {
        if (!choice.text.empty() && cleaned == clean_text(choice.text)) {
            return choice.letter;
        }
    }
    // 5. lenient: a unique whole-word letter token anywhere in the text
    if (matching == ChoiceMatching::Lenient) {
        std::optional<std::string> found;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!std::isalpha(static_cast<unsigned char>(t[i]))) continue;
            bool left_ok = (i == 0) || !word_char(t[i - 1]);
            bool right_ok = (i + 1 == t.size()) || !word_char(t[i + 1]);
            if (!left_ok || !right_ok) continue;
            if (auto letter = valid(t[i])) {
                if (found && *found != *letter) return std::nullopt;  // ambiguous
                found = letter;
            }
        }
        return found;
    }
    return std::nullopt;
}

struct NumberMatch {
    double value = 0.0;
    std::size_t end = 0;  // one past the matched number text
    bool percent = false;
};

// First real number: optional sign, digits with optional comma thousands
// groups, optional decimal fraction, optional trailing %. A match glued to
// a preceding word character ("v2") is not a measurement and is skipped
// whole.
std::optional<NumberMatch> find_first_number(std::string_view t) {
    auto digit = [&](std::size_t i) {
        return i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]));
    };
    std::size_t start = 0;
    while (start < t.size()) {
        std::size_t i = start;
        if (t[i] == '+' || t[i] == '-') {
            bool digit_next = digit(i + 1);
            bool fraction_next = i + 1 < t.size() && t[i + 1] == '.' && digit(i + 2);
            if (!digit_next && !fraction_next) {
                ++start;
                continue;
            }
            ++i;
        }
        if (!digit(i) && !(i < t.size() && t[i] == '.' && digit(i + 1))) {
            ++start;
            continue;
        }

        std::string digits;
        if (t[i] != '.') {
            std::size_t int_begin = i;
            while (digit(i)) ++i;
            digits.assign(t.substr(int_begin, i - int_begin));
            // comma-separated thousands groups: each exactly three digits
            while (i < t.size() && t[i] == ',' && digit(i + 1) && digit(i + 2) && digit(i + 3) &&
                   !digit(i + 4)) {
                digits += t.substr(i + 1, 3);
                i += 4;
            }
        }
        if (i < t.size() && t[i] == '.' && digit(i + 1)) {
            std::size_t frac_begin = i;
            ++i;
            while (digit(i)) ++i;
            digits += t.substr(frac_begin, i - frac_begin);
        }

        NumberMatch match;
        match.end = i;
        if (i < t.size() && t[i] == '%') {
            match.percent = true;
            ++match.end;
        }
        if (start > 0 && word_char(t[start - 1])) {
            start = match.end;
            continue;
        }
        std::string literal;
        if (t[start] == '-' || t[start] == '+') literal.push_back(t[start]);
        literal += digits;
        match.value = std::strtod(literal.c_str(), nullptr);
        return match;
    }
    return std::nullopt;
}

std::optional<std::string> unit_after(std::string_view t, const NumberMatch& match) {
    if (match.percent) return std::string("%");
    std::size_t i = match.end;
    while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
    std::size_t begin = i;
    while (i < t.size() && std::isalpha(static_cast<unsigned char>(t[i]))) ++i;
    if (i == begin) return std::nullopt;
    std::string unit(t.substr(begin, i - begin));
    for (char& c : unit) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return unit;
}

}  // namespace

NormalizedAnswer normalize_answer(std::string_view answer_text, const RawTrace& trace,
                                  ChoiceMatching matching) {
    NormalizedAnswer out;
    out.text = clean_text(answer_text);

    switch (trace.answer_kind) {
        case AnswerKind::MultipleChoice:
            if (auto letter = match_choice_letter(answer_text, trace.choices, matching)) {
                out.kind = NormalKind::Choice;
                out.choice_letter = *letter;
            }
            break;
        case AnswerKind::Numeric:
            if (auto match = find_first_number(trim(answer_text))) {
                if (std::isfinite(match->value)) {
                    out.kind = NormalKind::Number;
                    out.value = match->value;
                    out.unit = unit_after(trim(answer_text), *match);
                }
            }
            break;
        case AnswerKind::FreeText:
            break;
    }
    return out;
}

TokenCount count_output_tokens(std::optional<std::int64_t> reported, std::string_view raw_text) {
    if (reported.has_value()) {
        return {*reported, false};
    }
    std::int64_t words = 0;
    bool in_word = false;
    for (char c : raw_text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return {words, true};
}

TokenCount count_output_tokens(const ResponseRecord& record) {
    return count_output_tokens(record.completion_tokens, record.raw_text);
}

void ViolationSummary::add(const std::string& task, EvalMode mode,
                           const std::vector<Violation>& violations) {
    for (Violation v : violations) {
        ++counts[task][mode][v];
    }
}

void write_violation_summary(const ViolationSummary& summary, const std::filesystem::path& json_path) {
    json root = json::object();
    for (const auto& [task, by_mode] : summary.counts) {
        json task_obj = json::object();
        for (const auto& [mode, by_violation] : by_mode) {
            json mode_obj = json::object();
            for (const auto& [violation, count] : by_violation) {
                mode_obj[std::string(violation_name(violation))] = count;
            }
            task_obj[std::string(mode_name(mode))] = std::move(mode_obj);
        }
        root[task] = std::move(task_obj);
    }
    io::write_file_atomic(json_path, root.dump(2) + "\n");
}

}  // namespace dualtune
