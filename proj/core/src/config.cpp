#include "dualtune/config.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "dualtune/digest.hpp"
#include "io_util.hpp"

namespace dualtune {

using nlohmann::json;

const EndpointConfig& RunConfig::endpoint_for(ModelRole role) const {
    const auto& endpoint = role == ModelRole::Base ? base_endpoint : dual_tuned_endpoint;
    if (!endpoint) {
        throw std::runtime_error("endpoint '" + std::string(role_name(role)) +
                                 "' is not configured");
    }
    return *endpoint;
}

std::filesystem::path RunConfig::resolved_cache_dir() const {
    return cache_dir.value_or(output_root / "cache");
}

std::filesystem::path RunConfig::run_dir() const {
    return output_root / run_id;
}

namespace {

const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string require_string(const json& j, const char* key, const std::string& context) {
    const json* v = find(j, key);
    if (!v || !v->is_string()) {
        throw std::runtime_error("config: " + context + "." + key + " must be a string");
    }
    return v->get<std::string>();
}

EndpointConfig parse_endpoint(const json& j, const std::string& context) {
    EndpointConfig e;
    e.base_url = require_string(j, "base_url", context);
    e.model = require_string(j, "model", context);
    if (const json* v = find(j, "auth_env")) e.auth_env = v->get<std::string>();
    if (const json* v = find(j, "timeout_s")) e.timeout_s = v->get<double>();
    if (const json* v = find(j, "max_parallel")) e.max_parallel = v->get<int>();
    if (const json* v = find(j, "retry")) {
        if (const json* a = find(*v, "max_attempts")) e.retry.max_attempts = a->get<int>();
        if (const json* b = find(*v, "initial_backoff_ms")) e.retry.initial_backoff_ms = b->get<int>();
        if (const json* m = find(*v, "backoff_multiplier")) e.retry.backoff_multiplier = m->get<double>();
    }
    e.validate();
    return e;
}

json endpoint_canonical(const EndpointConfig& e) {
    return json{
        {"base_url", e.base_url},
        {"model", e.model},
        {"auth_env", e.auth_env},
        {"timeout_s", e.timeout_s},
        {"max_parallel", e.max_parallel},
        {"retry",
         {{"max_attempts", e.retry.max_attempts},
          {"initial_backoff_ms", e.retry.initial_backoff_ms},
          {"backoff_multiplier", e.retry.backoff_multiplier}}},
    };
}

SamplingConfig parse_sampling(const json& j, SamplingConfig defaults) {
    SamplingConfig s = defaults;
    if (const json* v = find(j, "temperature")) s.temperature = v->get<double>();
    if (const json* v = find(j, "max_output_tokens")) s.max_output_tokens = v->get<int>();
    if (const json* v = find(j, "seed")) s.seed = v->get<std::uint64_t>();
    return s;
}

json sampling_canonical(const SamplingConfig& s) {
    json j = json::object();
    if (s.temperature) j["temperature"] = *s.temperature;
    if (s.max_output_tokens) j["max_output_tokens"] = *s.max_output_tokens;
    if (s.seed) j["seed"] = *s.seed;
    return j;
}

std::string digest_file_or_absent(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec) || ec) return "absent";
    return sha256_hex(io::read_file(path));
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    json j = json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw std::runtime_error("config file is not a JSON object: " + path.string());
    }

    RunConfig config;
    if (const json* v = find(j, "corpus")) {
        if (v->is_string()) {
            config.corpus_paths.push_back(v->get<std::string>());
        } else if (v->is_array()) {
            for (const auto& p : *v) config.corpus_paths.push_back(p.get<std::string>());
        } else {
            throw std::runtime_error("config: corpus must be a path or list of paths");
        }
    }
    if (const json* v = find(j, "eval_set")) config.eval_set = v->get<std::string>();
    if (const json* v = find(j, "output_root")) config.output_root = v->get<std::string>();
    if (const json* v = find(j, "cache_dir")) config.cache_dir = v->get<std::string>();
    if (const json* v = find(j, "epsilon")) config.epsilon = v->get<double>();

    if (const json* v = find(j, "token_policy")) {
        auto policy = parse_token_policy(v->get<std::string>());
        if (!policy) throw std::runtime_error("config: unknown token_policy");
        config.token_policy = *policy;
    }

    if (const json* endpoints = find(j, "endpoints")) {
        if (const json* v = find(*endpoints, "base")) {
            config.base_endpoint = parse_endpoint(*v, "endpoints.base");
        }
        if (const json* v = find(*endpoints, "dual_tuned")) {
            config.dual_tuned_endpoint = parse_endpoint(*v, "endpoints.dual_tuned");
        }
        if (const json* v = find(*endpoints, "grader")) {
            config.grader_endpoint = parse_endpoint(*v, "endpoints.grader");
        }
    }

    if (const json* sampling = find(j, "sampling")) {
        if (const json* v = find(*sampling, "thinking")) {
            config.thinking_sampling = parse_sampling(*v, config.thinking_sampling);
        }
        if (const json* v = find(*sampling, "direct_answer")) {
            config.direct_answer_sampling = parse_sampling(*v, config.direct_answer_sampling);
        }
    }

    if (const json* v = find(j, "wait_filter")) {
        if (const json* markers = find(*v, "markers")) {
            config.wait_filter.markers.clear();
            for (const auto& m : *markers) config.wait_filter.markers.push_back(m.get<std::string>());
        }
        if (const json* max = find(*v, "max_repeats")) {
            config.wait_filter.max_repeats = max->get<int>();
        }
        if (config.wait_filter.max_repeats < 0) {
            throw std::runtime_error("config: wait_filter.max_repeats must be >= 0");
        }
    }

    if (const json* scoring = find(j, "scoring")) {
        if (const json* v = find(*scoring, "numeric_default")) {
            auto rule = parse_score_rule(v->get<std::string>());
            if (!rule || (*rule != ScoreRule::NumericMra && *rule != ScoreRule::NumericExact)) {
                throw std::runtime_error("config: scoring.numeric_default must be numeric_mra or numeric_exact");
            }
            config.scoring.numeric_default = *rule;
        }
        if (const json* v = find(*scoring, "choice_matching")) {
            std::string name = v->get<std::string>();
            if (name == "strict") config.scoring.choice_matching = ChoiceMatching::Strict;
            else if (name == "lenient") config.scoring.choice_matching = ChoiceMatching::Lenient;
            else throw std::runtime_error("config: scoring.choice_matching must be strict or lenient");
        }
        if (const json* v = find(*scoring, "strict_format")) {
            config.scoring.strict_format = v->get<bool>();
        }
        if (const json* v = find(*scoring, "task_choice_matching")) {
            for (const auto& [task, name] : v->items()) {
                std::string matching = name.get<std::string>();
                if (matching == "strict") {
                    config.scoring.task_choice_matching[task] = ChoiceMatching::Strict;
                } else if (matching == "lenient") {
                    config.scoring.task_choice_matching[task] = ChoiceMatching::Lenient;
                } else {
                    throw std::runtime_error("config: unknown choice matching for task " + task);
                }
            }
        }
        if (const json* v = find(*scoring, "task_rules")) {
            for (const auto& [task, rule_name] : v->items()) {
                auto rule = parse_score_rule(rule_name.get<std::string>());
                if (!rule) {
                    throw std::runtime_error("config: unknown score rule for task " + task);
                }
                config.scoring.task_rules[task] = *rule;
            }
        }
    }

    if (const json* v = find(j, "options_style")) {
        auto style = parse_options_style(v->get<std::string>());
        if (!style) throw std::runtime_error("config: unknown options_style");
        config.options_style = *style;
    }
    if (const json* v = find(j, "task_order")) config.task_order_path = v->get<std::string>();
    if (const json* v = find(j, "task_groups")) config.task_groups_path = v->get<std::string>();

    config.run_id = compute_run_id(config);
    return config;
}

std::string compute_run_id(const RunConfig& config) {
    // Canonical re-dump of the semantic fields: formatting-only edits keep
    // the id stable, and output locations are deliberately excluded so the
    // same work relocates without becoming a different run.
    json canonical = json::object();

    json inputs = json::object();
    json corpus = json::array();
    for (const auto& path : config.corpus_paths) {
        corpus.push_back(digest_file_or_absent(path));
    }
    inputs["corpus"] = std::move(corpus);
    inputs["eval_set"] = config.eval_set ? digest_file_or_absent(*config.eval_set) : "absent";
    inputs["task_order"] =
        config.task_order_path ? digest_file_or_absent(*config.task_order_path) : "absent";
    inputs["task_groups"] =
        config.task_groups_path ? digest_file_or_absent(*config.task_groups_path) : "absent";
    canonical["inputs"] = std::move(inputs);

    json endpoints = json::object();
    if (config.base_endpoint) endpoints["base"] = endpoint_canonical(*config.base_endpoint);
    if (config.dual_tuned_endpoint) {
        endpoints["dual_tuned"] = endpoint_canonical(*config.dual_tuned_endpoint);
    }
    if (config.grader_endpoint) endpoints["grader"] = endpoint_canonical(*config.grader_endpoint);
    canonical["endpoints"] = std::move(endpoints);

    canonical["sampling"] = {{"thinking", sampling_canonical(config.thinking_sampling)},
                             {"direct_answer", sampling_canonical(config.direct_answer_sampling)}};
    canonical["wait_filter"] = {{"markers", config.wait_filter.markers},
                                {"max_repeats", config.wait_filter.max_repeats}};

    json task_rules = json::object();
    for (const auto& [task, rule] : config.scoring.task_rules) {
        task_rules[task] = std::string(score_rule_name(rule));
    }
    json task_matching = json::object();
    for (const auto& [task, matching] : config.scoring.task_choice_matching) {
        task_matching[task] = matching == ChoiceMatching::Strict ? "strict" : "lenient";
    }
    canonical["scoring"] = {
        {"numeric_default", std::string(score_rule_name(config.scoring.numeric_default))},
        {"choice_matching",
         config.scoring.choice_matching == ChoiceMatching::Strict ? "strict" : "lenient"},
        {"task_choice_matching", std::move(task_matching)},
        {"strict_format", config.scoring.strict_format},
        {"task_rules", std::move(task_rules)},
    };
    canonical["epsilon"] = config.epsilon;
    canonical["options_style"] = std::string(options_style_name(config.options_style));
    canonical["token_policy"] = std::string(token_policy_name(config.token_policy));
    canonical["prompts"] = {{"thinking", prompt_digest(EvalMode::Thinking)},
                            {"direct_answer", prompt_digest(EvalMode::DirectAnswer)}};

    return short_digest(canonical.dump());
}

std::vector<std::string> read_task_list(const std::filesystem::path& path) {
    std::vector<std::string> out;
    for (const auto& line : io::read_numbered_lines(path)) {
        if (io::is_blank(line.text)) continue;
        out.push_back(line.text);
    }
    return out;
}

std::map<std::string, std::string> read_task_groups(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    for (const auto& line : io::read_numbered_lines(path)) {
        if (io::is_blank(line.text)) continue;
        auto fields = io::split_tsv(line.text);
        if (fields.size() != 2) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line.number) +
                                     ": expected task<TAB>group");
        }
        out[fields[0]] = fields[1];
    }
    return out;
}

}  // namespace dualtune
