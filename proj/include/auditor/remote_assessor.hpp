#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <string>
#include <vector>

#include "auditor/coverage.hpp"

namespace auditor::remote {

struct ModelServiceConfig {
    std::string provider = "generic";  ///< request/response adapter: generic, anthropic, gemini
    std::string endpoint;              ///< full URL, e.g. https://host/v1/complete
    std::string model_name;
    double temperature = 0.1;
    int batch_size = 5;
    int max_retries = 3;
    int rate_limit_requests = 10;  ///< at most this many requests ...
    double rate_limit_window_seconds = 60.0;  ///< ... per window
    double backoff_initial_seconds = 1.0;
    double timeout_seconds = 120.0;
    std::filesystem::path cache_dir;
    std::string api_key_env;  ///< environment variable holding the credential; never persisted
    std::string assessor_id;  ///< defaults to "remote:<provider>:<model_name>"

    std::string effective_assessor_id() const;
    /// Throws SchemaViolation when an invariant is broken.
    void validate() const;

    static ModelServiceConfig from_json(const json& j);
    /// Never includes the credential itself.
    json to_json() const;
};

// ---------------------------------------------------------------------------
// Prompting and response parsing

inline constexpr const char* kPromptTemplateVersion = "coverage-prompt-v1";

/// Hash of the fixed template text; reports cite it so results can be tied to the wording.
std::string prompt_template_hash();

std::string render_profile(const kb::DatasetProfile& profile);
std::string render_prompt(const std::vector<stix::TechniqueRecord>& batch, const kb::DatasetProfile& profile);

struct ParsedAssessment {
    coverage::CriteriaVector criteria;
    std::string rationale;
};

class MalformedResponse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Strict parse of the line format the prompt demands. Throws MalformedResponse when any line
/// deviates; techniques simply absent from the text are missing from the returned map.
std::map<std::string, ParsedAssessment> parse_response(const std::string& text,
                                                       const std::vector<std::string>& expected_ids);

/// Content hash of (model name, single-pair prompt text).
std::string pair_cache_key(const std::string& model_name, const stix::TechniqueRecord& technique,
                           const kb::DatasetProfile& profile);

// ---------------------------------------------------------------------------
// Cache

/// One immutable JSON file per assessed pair under `<dir>/records/`; raw unparseable
/// responses are archived under `<dir>/raw/`.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<coverage::AssessmentRecord> lookup(const std::string& key) const;
    /// No-op when an entry already exists.
    void store(const std::string& key, const coverage::AssessmentRecord& record) const;
    std::filesystem::path archive_raw(const std::string& text) const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path entry_path(const std::string& key) const;
    std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Transport

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;  ///< 0 when the connection itself failed
    std::string body;
    std::string error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport; supports http:// and https:// URLs.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(double timeout_seconds = 120.0);
    HttpResponse post(const HttpRequest& request) override;

private:
    double timeout_seconds_;
};

/// Request body and response text location for one model provider.
class ProviderAdapter {
public:
    virtual ~ProviderAdapter() = default;
    virtual HttpRequest build_request(const ModelServiceConfig& config, const std::string& prompt,
                                      const std::string& api_key) const = 0;
    /// Throws MalformedResponse when the text field is absent.
    virtual std::string extract_text(const std::string& response_body) const = 0;
};

/// Throws UsageError for an unknown provider name.
std::unique_ptr<ProviderAdapter> make_adapter(const std::string& provider);

// ---------------------------------------------------------------------------
// Rate limiting

struct Clock {
    std::function<std::chrono::steady_clock::time_point()> now = [] { return std::chrono::steady_clock::now(); };
    std::function<void(std::chrono::steady_clock::duration)> sleep = [](std::chrono::steady_clock::duration d) {
        std::this_thread::sleep_for(d);
    };
};

/// Sliding-window limiter: at most `max_requests` acquisitions per `window`.
class RateLimiter {
public:
    RateLimiter(int max_requests, std::chrono::steady_clock::duration window, Clock clock = {});
    void acquire();

private:
    int max_requests_;
    std::chrono::steady_clock::duration window_;
    Clock clock_;
    std::deque<std::chrono::steady_clock::time_point> sent_;
};

// ---------------------------------------------------------------------------
// Assessor

struct RemoteStats {
    std::size_t cache_hits = 0;
    std::size_t batches = 0;
    std::size_t requests = 0;  ///< HTTP attempts, retries included
    std::size_t retries = 0;
    std::size_t malformed = 0;
    std::size_t unassessed = 0;
};

struct RemoteResult {
    std::vector<coverage::AssessmentRecord> records;  ///< same order as the input techniques
    RemoteStats stats;
};

class RemoteAssessor {
public:
    RemoteAssessor(ModelServiceConfig config, std::shared_ptr<Transport> transport, Clock clock = {},
                   coverage::LabelThresholds thresholds = {});

    RemoteResult assess(const std::vector<stix::TechniqueRecord>& techniques, const kb::DatasetProfile& profile);

    const ModelServiceConfig& config() const noexcept { return config_; }

private:
    /// Returns the response text, or nullopt once retries are exhausted.
    std::optional<std::string> send_with_retries(const std::string& prompt, RemoteStats& stats, std::string& error);

    ModelServiceConfig config_;
    std::shared_ptr<Transport> transport_;
    std::unique_ptr<ProviderAdapter> adapter_;
    Clock clock_;
    RateLimiter limiter_;
    ResponseCache cache_;
    coverage::LabelThresholds thresholds_;
};

}  // namespace auditor::remote
