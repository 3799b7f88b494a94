#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/modes.hpp"
#include "dualtune/prompting.hpp"

namespace dualtune {

struct RetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 250;
    double backoff_multiplier = 2.0;
};

struct EndpointConfig {
    std::string base_url;  // e.g. http://host:8000/v1
    std::string model;
    std::string auth_env;  // name of the env var holding the bearer token
    double timeout_s = 120.0;
    int max_parallel = 4;
    RetryPolicy retry;

    void validate() const;  // throws std::invalid_argument
};

enum class TransportKind { Live, Cache, Replay };
std::string_view transport_kind_name(TransportKind k);
std::optional<TransportKind> parse_transport_kind(std::string_view name);

struct ResponseError {
    std::string kind;  // network | http_status | malformed_response | replay_miss
    std::string detail;
};

// One model reply for (sample, role, mode). Exactly one of raw_text /
// error carries the outcome; errors are data so analysis can run over
// partial evaluations.
struct ResponseRecord {
    std::string sample_id;
    ModelRole role = ModelRole::Base;
    EvalMode mode = EvalMode::DirectAnswer;
    std::string raw_text;
    std::optional<std::int64_t> completion_tokens;  // endpoint-reported
    double latency_ms = 0.0;                        // 0 for cache/replay
    TransportKind transport = TransportKind::Live;
    int attempts = 0;
    std::optional<ResponseError> error;

    bool ok() const { return !error.has_value(); }
};

struct TransportResult {
    std::string raw_text;
    std::optional<std::int64_t> completion_tokens;
    std::optional<ResponseError> error;
    int attempts = 1;
};

class Transport {
  public:
    virtual ~Transport() = default;
    virtual TransportResult complete(const ChatRequest& request, const EndpointConfig& config) = 0;
    virtual TransportKind kind() const = 0;
};

// Chat-completions wire client over plain HTTP with retry/backoff. Bearer
// token is read from config.auth_env when that variable is set.
class HttpTransport final : public Transport {
  public:
    TransportResult complete(const ChatRequest& request, const EndpointConfig& config) override;
    TransportKind kind() const override { return TransportKind::Live; }
};

// Resolves requests from canned fixture files named by request digest;
// unknown digests come back as replay_miss errors. Fixture files use the
// same layout as cache entries, so a recorded cache directory replays as-is.
class ReplayTransport final : public Transport {
  public:
    explicit ReplayTransport(std::filesystem::path fixture_dir);
    TransportResult complete(const ChatRequest& request, const EndpointConfig& config) override;
    TransportKind kind() const override { return TransportKind::Replay; }

  private:
    std::filesystem::path fixture_dir_;
};

// Cache key: digest of (model name, system, user parts, sampling). Prompt
// or sampling changes invalidate cached entries by construction.
std::string request_digest(std::string_view model, const ChatRequest& request);

// Writes one fixture/cache entry under dir, named <digest>.json.
void write_replay_fixture(const std::filesystem::path& dir, std::string_view digest,
                          std::string_view raw_text,
                          std::optional<std::int64_t> completion_tokens = std::nullopt);

// Single request through the cache: cache hit is served verbatim,
// otherwise the transport runs and a successful result is persisted.
// Never throws past the record boundary. write_mu serializes cache writes
// when called from several workers; pass nullptr for single-threaded use.
ResponseRecord send_with_cache(const ChatRequest& request, const EndpointConfig& config,
                               ModelRole role, const std::filesystem::path& cache_dir,
                               Transport& transport, std::mutex* write_mu = nullptr);

// Uncached single request.
ResponseRecord send(const ChatRequest& request, const EndpointConfig& config, ModelRole role,
                    Transport& transport);

struct EvalRunSummary {
    std::size_t total = 0;
    std::size_t live = 0;
    std::size_t cache = 0;
    std::size_t replay = 0;
    std::size_t errors = 0;
};

struct EvalRunResult {
    std::vector<ResponseRecord> records;  // sorted by sample_id
    EvalRunSummary summary;
};

// Evaluates every sample under (role, mode) with up to config.max_parallel
// requests in flight. Successful responses are cached under cache_dir, so
// interrupted runs resume with only the missing records hitting the
// transport. Individual failures become error records, never aborts.
EvalRunResult run_eval(std::span<const RawTrace> samples, ModelRole role, EvalMode mode,
                       const EndpointConfig& config, const SamplingConfig& sampling,
                       const std::filesystem::path& cache_dir, Transport& transport,
                       OptionsStyle options_style = OptionsStyle::LetterDot);

// Same run over the unique base traces of a manifest.
EvalRunResult run_eval(const DatasetManifest& manifest, ModelRole role, EvalMode mode,
                       const EndpointConfig& config, const SamplingConfig& sampling,
                       const std::filesystem::path& cache_dir, Transport& transport,
                       OptionsStyle options_style = OptionsStyle::LetterDot);

void write_records(std::span<const ResponseRecord> records, const std::filesystem::path& jsonl_path);
std::vector<ResponseRecord> read_records(const std::filesystem::path& jsonl_path);

}  // namespace dualtune
