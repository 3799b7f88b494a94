#include "dualtune/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "io_util.hpp"

namespace dualtune {

using nlohmann::json;

namespace {

bool has_control_chars(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) {
        unsigned char u = static_cast<unsigned char>(c);
        return u == '\t' || u == '\n' || u == '\r';
    });
}

std::string upper_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

json trace_to_json(const RawTrace& t) {
    json choices = json::array();
    for (const auto& c : t.choices) {
        choices.push_back({{"letter", c.letter}, {"text", c.text}});
    }
    return json{
        {"id", t.id},
        {"task_label", t.task_label},
        {"modality", std::string(modality_name(t.modality))},
        {"media", t.media},
        {"question", t.question},
        {"thinking", t.thinking},
        {"answer", t.answer},
        {"answer_kind", std::string(answer_kind_name(t.answer_kind))},
        {"choices", std::move(choices)},
    };
}

// Validates one corpus record; returns the failure reason or fills `out`.
std::optional<std::string> trace_from_json(const json& j, RawTrace& out) {
    if (!j.is_object()) return "record is not an object";

    auto str_field = [&](const char* key, bool required, std::string& dst) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) return std::string("missing field: ") + key;
            return std::nullopt;
        }
        if (!it->is_string()) return std::string("field is not a string: ") + key;
        dst = it->get<std::string>();
        return std::nullopt;
    };

    if (auto e = str_field("id", true, out.id)) return e;
    if (out.id.empty()) return "empty id";
    if (has_control_chars(out.id)) return "id contains control characters";

    if (auto e = str_field("task_label", true, out.task_label)) return e;
    if (out.task_label.empty()) return "empty task_label";
    if (has_control_chars(out.task_label)) return "task_label contains control characters";

    std::string modality = "text_only";
    if (auto e = str_field("modality", false, modality)) return e;
    auto parsed_modality = parse_modality(modality);
    if (!parsed_modality) return "unknown modality: " + modality;
    out.modality = *parsed_modality;

    out.media.clear();
    if (auto it = j.find("media"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) return "field is not an array: media";
        for (const auto& m : *it) {
            if (!m.is_string()) return "media entry is not a string";
            out.media.push_back(m.get<std::string>());
        }
    }

    if (auto e = str_field("question", true, out.question)) return e;
    if (out.question.empty()) return "empty question";

    out.thinking.clear();
    if (auto e = str_field("thinking", false, out.thinking)) return e;

    if (auto e = str_field("answer", true, out.answer)) return e;
    if (out.answer.empty()) return "empty answer";

    std::string kind;
    if (auto e = str_field("answer_kind", true, kind)) return e;
    auto parsed_kind = parse_answer_kind(kind);
    if (!parsed_kind) return "unknown answer_kind: " + kind;
    out.answer_kind = *parsed_kind;

    out.choices.clear();
    if (auto it = j.find("choices"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) return "field is not an array: choices";
        for (const auto& c : *it) {
            if (!c.is_object() || !c.contains("letter") || !c.contains("text") ||
                !c["letter"].is_string() || !c["text"].is_string()) {
                return "choice entry must be an object with string letter and text";
            }
            Choice choice{upper_ascii(c["letter"].get<std::string>()), c["text"].get<std::string>()};
            if (choice.letter.size() != 1 || !std::isalpha(static_cast<unsigned char>(choice.letter[0]))) {
                return "choice letter must be a single letter: " + choice.letter;
            }
            out.choices.push_back(std::move(choice));
        }
    }

    if (out.answer_kind == AnswerKind::MultipleChoice) {
        if (out.choices.empty()) return "answer_kind multiple_choice requires non-empty choices";
        std::string gold = upper_ascii(out.answer);
        bool found = std::any_of(out.choices.begin(), out.choices.end(),
                                 [&](const Choice& c) { return c.letter == gold; });
        if (!found) return "answer is not one of the choice letters: " + out.answer;
        out.answer = gold;
    }

    return std::nullopt;
}

}  // namespace

std::string_view modality_name(Modality m) {
    switch (m) {
        case Modality::Image: return "image";
        case Modality::Video: return "video";
        case Modality::TextOnly: return "text_only";
    }
    return "text_only";
}

std::string_view answer_kind_name(AnswerKind k) {
    switch (k) {
        case AnswerKind::MultipleChoice: return "multiple_choice";
        case AnswerKind::Numeric: return "numeric";
        case AnswerKind::FreeText: return "free_text";
    }
    return "free_text";
}

std::optional<Modality> parse_modality(std::string_view name) {
    if (name == "image") return Modality::Image;
    if (name == "video") return Modality::Video;
    if (name == "text_only" || name == "text-only") return Modality::TextOnly;
    return std::nullopt;
}

std::optional<AnswerKind> parse_answer_kind(std::string_view name) {
    if (name == "multiple_choice") return AnswerKind::MultipleChoice;
    if (name == "numeric") return AnswerKind::Numeric;
    if (name == "free_text") return AnswerKind::FreeText;
    return std::nullopt;
}

std::map<std::pair<std::string, EvalMode>, std::size_t> DatasetManifest::counts() const {
    std::map<std::pair<std::string, EvalMode>, std::size_t> out;
    for (const auto& e : entries) {
        ++out[{e.trace.task_label, e.mode}];
    }
    return out;
}

std::set<std::string> DatasetManifest::task_labels() const {
    std::set<std::string> out;
    for (const auto& e : entries) out.insert(e.trace.task_label);
    return out;
}

CorpusLoadResult load_corpus(const std::filesystem::path& path, std::string_view schema_id,
                             bool strict) {
    if (schema_id != kCorpusSchemaId) {
        throw std::invalid_argument("unknown corpus schema id: " + std::string(schema_id));
    }
    CorpusLoadResult result;
    auto lines = io::read_numbered_lines(path);
    if (lines.empty()) {
        result.warnings.push_back("empty corpus file: " + path.string());
        return result;
    }

    std::set<std::string> seen_ids;
    for (const auto& line : lines) {
        if (io::is_blank(line.text)) continue;
        std::string reason;
        RawTrace trace;
        json j = json::parse(line.text, nullptr, false);
        if (j.is_discarded()) {
            reason = "invalid json";
        } else if (auto err = trace_from_json(j, trace)) {
            reason = *err;
        } else if (!seen_ids.insert(trace.id).second) {
            reason = "duplicate id: " + trace.id;
        }
        if (reason.empty()) {
            result.traces.push_back(std::move(trace));
        } else if (strict) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line.number) + ": " +
                                     reason);
        } else {
            result.rejects.push_back({line.number, reason});
        }
    }
    return result;
}

PairBlocker pairability(const RawTrace& trace) {
    if (trace.thinking.empty()) return PairBlocker::EmptyThinking;
    if (trace.thinking.find(kThinkOpenTag) != std::string::npos ||
        trace.thinking.find(kThinkCloseTag) != std::string::npos) {
        return PairBlocker::TagInThinking;
    }
    if (trace.answer.find(kAnswerOpenTag) != std::string::npos ||
        trace.answer.find(kAnswerCloseTag) != std::string::npos) {
        return PairBlocker::TagInAnswer;
    }
    return PairBlocker::None;
}

std::string_view pair_blocker_name(PairBlocker b) {
    switch (b) {
        case PairBlocker::None: return "none";
        case PairBlocker::EmptyThinking: return "empty_thinking";
        case PairBlocker::TagInThinking: return "tag_in_thinking";
        case PairBlocker::TagInAnswer: return "tag_in_answer";
    }
    return "none";
}

PairedSample strip_thinking(const RawTrace& trace) {
    PairBlocker blocker = pairability(trace);
    if (blocker != PairBlocker::None) {
        throw std::invalid_argument("trace " + trace.id + " cannot form a CoT/DA pair: " +
                                    std::string(pair_blocker_name(blocker)));
    }
    PairedSample pair;
    pair.base = trace;
    pair.cot_target.reserve(trace.thinking.size() + trace.answer.size() + 32);
    pair.cot_target.append(kThinkOpenTag);
    pair.cot_target.append(trace.thinking);
    pair.cot_target.append(kThinkCloseTag);
    pair.cot_target.append(kAnswerOpenTag);
    pair.cot_target.append(trace.answer);
    pair.cot_target.append(kAnswerCloseTag);
    pair.da_target = trace.answer;
    return pair;
}

int count_marker_words(std::string_view text, std::span<const std::string> markers) {
    auto word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };

    int total = 0;
    for (const auto& marker : markers) {
        if (marker.empty()) continue;
        const std::size_t m = marker.size();
        for (std::size_t i = 0; i + m <= text.size(); ++i) {
            bool match = true;
            for (std::size_t k = 0; k < m; ++k) {
                if (lower(text[i + k]) != lower(marker[k])) {
                    match = false;
                    break;
                }
            }
            if (!match) continue;
            bool left_ok = (i == 0) || !word_char(text[i - 1]);
            bool right_ok = (i + m == text.size()) || !word_char(text[i + m]);
            if (left_ok && right_ok) {
                ++total;
                i += m - 1;
            }
        }
    }
    return total;
}

FilterDecision filter_wait_repetition(const RawTrace& trace, const WaitFilterPolicy& policy) {
    if (policy.max_repeats < 0) {
        throw std::invalid_argument("max_repeats must be >= 0");
    }
    int count = count_marker_words(trace.thinking, policy.markers);
    return {count <= policy.max_repeats, count};
}

namespace {

ManifestEntry make_entry(const RawTrace& trace, EvalMode mode, std::string target) {
    ManifestEntry e;
    e.trace = trace;
    e.mode = mode;
    e.target = std::move(target);
    e.system_prompt_id = std::string(system_prompt_id(mode));
    return e;
}

template <typename T, typename IdOf>
std::vector<const T*> sorted_unique_by_id(std::span<const T> items, IdOf id_of) {
    std::vector<const T*> ptrs;
    ptrs.reserve(items.size());
    for (const auto& item : items) ptrs.push_back(&item);
    std::sort(ptrs.begin(), ptrs.end(),
              [&](const T* a, const T* b) { return id_of(*a) < id_of(*b); });
    for (std::size_t i = 1; i < ptrs.size(); ++i) {
        if (id_of(*ptrs[i]) == id_of(*ptrs[i - 1])) {
            throw std::runtime_error("duplicate sample id: " + id_of(*ptrs[i]));
        }
    }
    return ptrs;
}

}  // namespace

DatasetManifest build_dual_mixture(std::span<const PairedSample> pairs) {
    if (pairs.empty()) {
        throw std::invalid_argument("cannot build a dual mixture from zero pairs");
    }
    auto ordered = sorted_unique_by_id(pairs, [](const PairedSample& p) { return p.base.id; });
    DatasetManifest manifest;
    manifest.entries.reserve(pairs.size() * 2);
    for (const PairedSample* pair : ordered) {
        manifest.entries.push_back(make_entry(pair->base, EvalMode::Thinking, pair->cot_target));
        manifest.entries.push_back(make_entry(pair->base, EvalMode::DirectAnswer, pair->da_target));
    }
    manifest.provenance["mixture"] = "dual";
    return manifest;
}

DatasetManifest build_single_mode_manifest(std::span<const RawTrace> traces, EvalMode mode) {
    auto ordered = sorted_unique_by_id(traces, [](const RawTrace& t) { return t.id; });
    DatasetManifest manifest;
    manifest.entries.reserve(traces.size());
    for (const RawTrace* trace : ordered) {
        if (mode == EvalMode::Thinking) {
            PairedSample pair = strip_thinking(*trace);  // throws on unpairable traces
            manifest.entries.push_back(make_entry(*trace, mode, pair.cot_target));
        } else {
            manifest.entries.push_back(make_entry(*trace, mode, trace->answer));
        }
    }
    manifest.provenance["mixture"] =
        mode == EvalMode::Thinking ? "cot_only" : "da_only";
    return manifest;
}

DatasetManifest emit_subset(const DatasetManifest& manifest, const std::set<std::string>& task_set,
                            std::optional<EvalMode> mode_filter) {
    if (task_set.empty()) {
        throw std::invalid_argument("emit_subset requires a non-empty task set");
    }
    DatasetManifest out;
    out.provenance = manifest.provenance;
    for (const auto& entry : manifest.entries) {
        if (!task_set.contains(entry.trace.task_label)) continue;
        if (mode_filter && entry.mode != *mode_filter) continue;
        out.entries.push_back(entry);
    }
    std::string predicate = "task_label in {";
    bool first = true;
    for (const auto& t : task_set) {
        if (!first) predicate += ", ";
        predicate += t;
        first = false;
    }
    predicate += "}";
    if (mode_filter) {
        predicate += " and mode = " + std::string(mode_data_tag(*mode_filter));
    }
    out.provenance["subset"] = predicate;
    return out;
}

std::vector<RawTrace> unique_traces(const DatasetManifest& manifest) {
    std::map<std::string, const RawTrace*> by_id;
    for (const auto& entry : manifest.entries) {
        by_id.emplace(entry.trace.id, &entry.trace);
    }
    std::vector<RawTrace> out;
    out.reserve(by_id.size());
    for (const auto& [id, trace] : by_id) out.push_back(*trace);
    return out;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& jsonl_path) {
    std::string body;
    for (const auto& entry : manifest.entries) {
        json j = trace_to_json(entry.trace);
        j["mode"] = std::string(mode_data_tag(entry.mode));
        j["target"] = entry.target;
        j["system_prompt_id"] = entry.system_prompt_id;
        body += j.dump();
        body.push_back('\n');
    }
    io::write_file_atomic(jsonl_path, body);
}

DatasetManifest read_manifest(const std::filesystem::path& jsonl_path) {
    DatasetManifest manifest;
    for (const auto& line : io::read_numbered_lines(jsonl_path)) {
        if (io::is_blank(line.text)) continue;
        json j = json::parse(line.text, nullptr, false);
        std::string context = jsonl_path.string() + ":" + std::to_string(line.number);
        if (j.is_discarded()) {
            throw std::runtime_error(context + ": invalid json");
        }
        ManifestEntry entry;
        if (auto err = trace_from_json(j, entry.trace)) {
            throw std::runtime_error(context + ": " + *err);
        }
        if (!j.contains("mode") || !j["mode"].is_string() || !j.contains("target") ||
            !j["target"].is_string() || !j.contains("system_prompt_id") ||
            !j["system_prompt_id"].is_string()) {
            throw std::runtime_error(context + ": missing manifest fields");
        }
        auto mode = parse_data_tag(j["mode"].get<std::string>());
        if (!mode) {
            throw std::runtime_error(context + ": unknown mode tag " + j["mode"].get<std::string>());
        }
        entry.mode = *mode;
        entry.target = j["target"].get<std::string>();
        entry.system_prompt_id = j["system_prompt_id"].get<std::string>();
        if (entry.system_prompt_id != system_prompt_id(entry.mode)) {
            throw std::runtime_error(context + ": system prompt id '" + entry.system_prompt_id +
                                     "' does not match mode tag " +
                                     std::string(mode_data_tag(entry.mode)));
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void write_manifest_summary(const DatasetManifest& manifest, const std::filesystem::path& json_path) {
    json counts = json::array();
    for (const auto& [key, count] : manifest.counts()) {
        counts.push_back({{"task", key.first},
                          {"mode", std::string(mode_data_tag(key.second))},
                          {"count", count}});
    }
    std::map<std::pair<Modality, EvalMode>, std::size_t> by_modality;
    for (const auto& entry : manifest.entries) {
        ++by_modality[{entry.trace.modality, entry.mode}];
    }
    json modality_counts = json::array();
    for (const auto& [key, count] : by_modality) {
        modality_counts.push_back({{"modality", std::string(modality_name(key.first))},
                                   {"mode", std::string(mode_data_tag(key.second))},
                                   {"count", count}});
    }
    json tasks = json::array();
    for (const auto& t : manifest.task_labels()) tasks.push_back(t);
    json j{
        {"provenance", manifest.provenance},
        {"counts", std::move(counts)},
        {"modality_counts", std::move(modality_counts)},
        {"tasks", std::move(tasks)},
        {"total_entries", manifest.entries.size()},
    };
    io::write_file_atomic(json_path, j.dump(2) + "\n");
}

}  // namespace dualtune
