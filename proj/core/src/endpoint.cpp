#include "dualtune/endpoint.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dualtune/digest.hpp"
#include "io_util.hpp"

namespace dualtune {

using nlohmann::json;

void EndpointConfig::validate() const {
    if (base_url.empty()) throw std::invalid_argument("endpoint base_url must be set");
    if (model.empty()) throw std::invalid_argument("endpoint model must be set");
    if (timeout_s <= 0.0) throw std::invalid_argument("endpoint timeout must be > 0");
    if (max_parallel < 1) throw std::invalid_argument("endpoint max_parallel must be >= 1");
    if (retry.max_attempts < 1) throw std::invalid_argument("retry max_attempts must be >= 1");
}

std::string_view transport_kind_name(TransportKind k) {
    switch (k) {
        case TransportKind::Live: return "live";
        case TransportKind::Cache: return "cache";
        case TransportKind::Replay: return "replay";
    }
    return "live";
}

std::optional<TransportKind> parse_transport_kind(std::string_view name) {
    if (name == "live") return TransportKind::Live;
    if (name == "cache") return TransportKind::Cache;
    if (name == "replay") return TransportKind::Replay;
    return std::nullopt;
}

namespace {

json sampling_to_json(const SamplingConfig& sampling) {
    json j = json::object();
    if (sampling.temperature) j["temperature"] = *sampling.temperature;
    if (sampling.max_output_tokens) j["max_tokens"] = *sampling.max_output_tokens;
    if (sampling.seed) j["seed"] = *sampling.seed;
    return j;
}

json user_parts_to_json(const ChatRequest& request) {
    json parts = json::array();
    for (const auto& part : request.user_parts) {
        if (const auto* text = std::get_if<TextPart>(&part)) {
            parts.push_back({{"type", "text"}, {"text", text->text}});
        } else {
            const auto& media = std::get<MediaPart>(part);
            if (media.modality == Modality::Video) {
                parts.push_back({{"type", "video_url"}, {"video_url", {{"url", media.uri}}}});
            } else {
                parts.push_back({{"type", "image_url"}, {"image_url", {{"url", media.uri}}}});
            }
        }
    }
    return parts;
}

json wire_body(const ChatRequest& request, const EndpointConfig& config) {
    json messages = json::array();
    messages.push_back({{"role", "system"}, {"content", request.system}});
    bool media = std::any_of(request.user_parts.begin(), request.user_parts.end(),
                             [](const UserPart& p) { return std::holds_alternative<MediaPart>(p); });
    if (media || request.user_parts.size() != 1) {
        messages.push_back({{"role", "user"}, {"content", user_parts_to_json(request)}});
    } else {
        messages.push_back({{"role", "user"}, {"content", std::get<TextPart>(request.user_parts[0]).text}});
    }
    json body{{"model", config.model}, {"messages", std::move(messages)}};
    json sampling = sampling_to_json(request.sampling);
    for (auto& [key, value] : sampling.items()) {
        body[key] = value;
    }
    return body;
}

struct ParsedReply {
    std::string text;
    std::optional<std::int64_t> completion_tokens;
};

std::optional<ParsedReply> parse_chat_completion(const std::string& body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
    const json& first = (*choices)[0];
    ParsedReply reply;
    if (first.contains("message") && first["message"].is_object() &&
        first["message"].contains("content") && first["message"]["content"].is_string()) {
        reply.text = first["message"]["content"].get<std::string>();
    } else if (first.contains("text") && first["text"].is_string()) {
        reply.text = first["text"].get<std::string>();
    } else {
        return std::nullopt;
    }
    if (j.contains("usage") && j["usage"].is_object() && j["usage"].contains("completion_tokens") &&
        j["usage"]["completion_tokens"].is_number()) {
        reply.completion_tokens = j["usage"]["completion_tokens"].get<std::int64_t>();
    }
    return reply;
}

struct SplitUrl {
    std::string host_port;  // scheme://host:port
    std::string prefix;     // path prefix, possibly empty
};

SplitUrl split_base_url(const std::string& base_url) {
    SplitUrl out;
    std::size_t scheme_end = base_url.find("://");
    std::size_t path_start =
        base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
        out.host_port = base_url;
    } else {
        out.host_port = base_url.substr(0, path_start);
        out.prefix = base_url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

TransportResult HttpTransport::complete(const ChatRequest& request, const EndpointConfig& config) {
    SplitUrl url = split_base_url(config.base_url);
    httplib::Client client(url.host_port);
    auto seconds = std::chrono::duration<double>(config.timeout_s);
    auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(seconds);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!config.auth_env.empty()) {
        if (const char* token = std::getenv(config.auth_env.c_str()); token && *token) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    std::string body = wire_body(request, config).dump();
    std::string path = url.prefix + "/chat/completions";

    TransportResult result;
    double backoff_ms = static_cast<double>(config.retry.initial_backoff_ms);
    for (int attempt = 1; attempt <= config.retry.max_attempts; ++attempt) {
        result.attempts = attempt;
        httplib::Result res = client.Post(path, headers, body, "application/json");
        if (!res) {
            result.error = ResponseError{"network", httplib::to_string(res.error())};
        } else if (res->status != 200) {
            std::string detail = "status " + std::to_string(res->status);
            if (!res->body.empty()) {
                detail += ": " + res->body.substr(0, 200);
            }
            result.error = ResponseError{"http_status", detail};
            if (!retryable_status(res->status)) {
                return result;
            }
        } else if (auto reply = parse_chat_completion(res->body)) {
            result.raw_text = std::move(reply->text);
            result.completion_tokens = reply->completion_tokens;
            result.error.reset();
            return result;
        } else {
            result.error = ResponseError{"malformed_response", res->body.substr(0, 200)};
            return result;
        }
        if (attempt < config.retry.max_attempts) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<std::int64_t>(backoff_ms)));
            backoff_ms *= config.retry.backoff_multiplier;
        }
    }
    return result;
}

ReplayTransport::ReplayTransport(std::filesystem::path fixture_dir)
    : fixture_dir_(std::move(fixture_dir)) {}

TransportResult ReplayTransport::complete(const ChatRequest& request, const EndpointConfig& config) {
    std::string digest = request_digest(config.model, request);
    std::filesystem::path fixture = fixture_dir_ / (digest + ".json");
    TransportResult result;
    if (!std::filesystem::exists(fixture)) {
        result.error = ResponseError{"replay_miss", digest};
        return result;
    }
    json j = json::parse(io::read_file(fixture), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("raw_text") ||
        !j["raw_text"].is_string()) {
        result.error = ResponseError{"malformed_response", "bad fixture: " + fixture.string()};
        return result;
    }
    result.raw_text = j["raw_text"].get<std::string>();
    if (j.contains("completion_tokens") && j["completion_tokens"].is_number()) {
        result.completion_tokens = j["completion_tokens"].get<std::int64_t>();
    }
    return result;
}

std::string request_digest(std::string_view model, const ChatRequest& request) {
    json canonical{
        {"model", std::string(model)},
        {"system", request.system},
        {"user_parts", user_parts_to_json(request)},
        {"sampling", sampling_to_json(request.sampling)},
    };
    return sha256_hex(canonical.dump());
}

void write_replay_fixture(const std::filesystem::path& dir, std::string_view digest,
                          std::string_view raw_text, std::optional<std::int64_t> completion_tokens) {
    json j{{"raw_text", std::string(raw_text)}};
    if (completion_tokens) j["completion_tokens"] = *completion_tokens;
    io::write_file_atomic(dir / (std::string(digest) + ".json"), j.dump() + "\n");
}

namespace {

ResponseRecord record_from_result(const ChatRequest& request, ModelRole role,
                                  TransportResult&& result, TransportKind kind,
                                  double latency_ms) {
    ResponseRecord record;
    record.sample_id = request.sample_id;
    record.role = role;
    record.mode = request.mode;
    record.transport = kind;
    record.attempts = result.attempts;
    if (result.error) {
        record.error = std::move(result.error);
    } else {
        record.raw_text = std::move(result.raw_text);
        record.completion_tokens = result.completion_tokens;
        record.latency_ms = kind == TransportKind::Live ? latency_ms : 0.0;
    }
    return record;
}

std::optional<ResponseRecord> load_cached(const ChatRequest& request, ModelRole role,
                                          const std::filesystem::path& cache_file) {
    if (!std::filesystem::exists(cache_file)) return std::nullopt;
    json j = json::parse(io::read_file(cache_file), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("raw_text") ||
        !j["raw_text"].is_string()) {
        return std::nullopt;  // unreadable entry; refetch
    }
    ResponseRecord record;
    record.sample_id = request.sample_id;
    record.role = role;
    record.mode = request.mode;
    record.transport = TransportKind::Cache;
    record.raw_text = j["raw_text"].get<std::string>();
    if (j.contains("completion_tokens") && j["completion_tokens"].is_number()) {
        record.completion_tokens = j["completion_tokens"].get<std::int64_t>();
    }
    record.attempts = 0;
    return record;
}

}  // namespace

ResponseRecord send(const ChatRequest& request, const EndpointConfig& config, ModelRole role,
                    Transport& transport) {
    auto start = std::chrono::steady_clock::now();
    TransportResult result;
    try {
        result = transport.complete(request, config);
    } catch (const std::exception& e) {
        result.error = ResponseError{"transport_exception", e.what()};
    }
    double latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return record_from_result(request, role, std::move(result), transport.kind(), latency_ms);
}

ResponseRecord send_with_cache(const ChatRequest& request, const EndpointConfig& config,
                               ModelRole role, const std::filesystem::path& cache_dir,
                               Transport& transport, std::mutex* write_mu) {
    std::string digest = request_digest(config.model, request);
    std::filesystem::path cache_file = cache_dir / (digest + ".json");
    if (auto cached = load_cached(request, role, cache_file)) {
        return *cached;
    }
    ResponseRecord record = send(request, config, role, transport);
    if (record.ok()) {
        json j{{"raw_text", record.raw_text}};
        if (record.completion_tokens) j["completion_tokens"] = *record.completion_tokens;
        std::string body = j.dump() + "\n";
        if (write_mu) {
            std::lock_guard<std::mutex> lock(*write_mu);
            io::write_file_atomic(cache_file, body);
        } else {
            io::write_file_atomic(cache_file, body);
        }
    }
    return record;
}

EvalRunResult run_eval(std::span<const RawTrace> samples, ModelRole role, EvalMode mode,
                       const EndpointConfig& config, const SamplingConfig& sampling,
                       const std::filesystem::path& cache_dir, Transport& transport,
                       OptionsStyle options_style) {
    config.validate();
    std::filesystem::create_directories(cache_dir);

    EvalRunResult result;
    result.records.resize(samples.size());

    std::atomic<std::size_t> next{0};
    std::mutex cache_write_mu;
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= samples.size()) break;
            ResponseRecord record;
            try {
                ChatRequest request = assemble_request(samples[i], mode, sampling, options_style);
                record = send_with_cache(request, config, role, cache_dir, transport,
                                         &cache_write_mu);
            } catch (const std::exception& e) {
                record.sample_id = samples[i].id;
                record.role = role;
                record.mode = mode;
                record.transport = transport.kind();
                record.error = ResponseError{"request_error", e.what()};
            }
            result.records[i] = std::move(record);
        }
    };

    std::size_t n_workers = std::min<std::size_t>(
        samples.size(), static_cast<std::size_t>(std::max(config.max_parallel, 1)));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    // completion order is nondeterministic; merge by sample id
    std::sort(result.records.begin(), result.records.end(),
              [](const ResponseRecord& a, const ResponseRecord& b) {
                  return a.sample_id < b.sample_id;
              });

    result.summary.total = result.records.size();
    for (const auto& record : result.records) {
        if (!record.ok()) {
            ++result.summary.errors;
        } else if (record.transport == TransportKind::Cache) {
            ++result.summary.cache;
        } else if (record.transport == TransportKind::Replay) {
            ++result.summary.replay;
        } else {
            ++result.summary.live;
        }
    }
    return result;
}

EvalRunResult run_eval(const DatasetManifest& manifest, ModelRole role, EvalMode mode,
                       const EndpointConfig& config, const SamplingConfig& sampling,
                       const std::filesystem::path& cache_dir, Transport& transport,
                       OptionsStyle options_style) {
    auto samples = unique_traces(manifest);
    return run_eval(samples, role, mode, config, sampling, cache_dir, transport, options_style);
}

void write_records(std::span<const ResponseRecord> records, const std::filesystem::path& jsonl_path) {
    std::string body;
    for (const auto& r : records) {
        json j{
            {"sample_id", r.sample_id},
            {"role", std::string(role_name(r.role))},
            {"mode", std::string(mode_name(r.mode))},
            {"transport", std::string(transport_kind_name(r.transport))},
            {"attempts", r.attempts},
            {"latency_ms", r.latency_ms},
        };
        if (r.ok()) {
            j["raw_text"] = r.raw_text;
            if (r.completion_tokens) j["completion_tokens"] = *r.completion_tokens;
        } else {
            j["error"] = {{"kind", r.error->kind}, {"detail", r.error->detail}};
        }
        body += j.dump();
        body.push_back('\n');
    }
    io::write_file_atomic(jsonl_path, body);
}

std::vector<ResponseRecord> read_records(const std::filesystem::path& jsonl_path) {
    std::vector<ResponseRecord> out;
    for (const auto& line : io::read_numbered_lines(jsonl_path)) {
        if (io::is_blank(line.text)) continue;
        json j = json::parse(line.text);
        ResponseRecord r;
        r.sample_id = j.at("sample_id").get<std::string>();
        r.role = *parse_role(j.at("role").get<std::string>());
        r.mode = *parse_mode(j.at("mode").get<std::string>());
        r.transport = *parse_transport_kind(j.at("transport").get<std::string>());
        r.attempts = j.at("attempts").get<int>();
        r.latency_ms = j.at("latency_ms").get<double>();
        if (j.contains("error")) {
            r.error = ResponseError{j["error"].at("kind").get<std::string>(),
                                    j["error"].at("detail").get<std::string>()};
        } else {
            r.raw_text = j.at("raw_text").get<std::string>();
            if (j.contains("completion_tokens")) {
                r.completion_tokens = j["completion_tokens"].get<std::int64_t>();
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dualtune
