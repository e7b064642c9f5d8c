#include "auditor/remote_assessor.hpp"

#include "auditor/errors.hpp"
#include "auditor/hashing.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

namespace auditor::remote {

namespace {

constexpr const char* kTemplateHeader =
    "You are assessing whether a public network intrusion detection dataset covers specific MITRE ATT&CK "
    "techniques.\n"
    "Use only the dataset profile and technique descriptions below.\n\n"
    "DATASET PROFILE\n{profile}\n"
    "TECHNIQUES\n{techniques}\n"
    "For EACH technique answer these five questions about the dataset:\n"
    "Q1: Does the dataset already contain a comparable attack type?\n"
    "Q2: Does it record the network protocol the technique relies on?\n"
    "Q3: Was it captured in the same operational domain (enterprise IT or industrial OT) as the technique?\n"
    "Q4: Does it expose the packet or process features needed to detect the technique?\n"
    "Q5: Does it offer more than token examples of the attack?\n\n"
    "Respond with one block per technique and nothing else, exactly in this format:\n"
    "TECHNIQUE <technique id>\n"
    "Q1: yes|no|unknown\n"
    "Q2: yes|no|unknown\n"
    "Q3: yes|no|unknown\n"
    "Q4: yes|no|unknown\n"
    "Q5: yes|no|unknown\n"
    "RATIONALE: <one line>\n";

std::string trim(std::string_view s)
{
    auto b = s.begin();
    auto e = s.end();
    while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
    return std::string(b, e);
}

std::string join(const std::vector<std::string>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += v[i];
    }
    return v.empty() ? "none" : out;
}

std::string render_technique(const stix::TechniqueRecord& t)
{
    std::vector<std::string> matrices;
    for (auto m : t.matrices) matrices.emplace_back(stix::to_string(m));
    return fmt::format("- id: {}\n  name: {}\n  matrices: {}\n  tactics: {}\n  data sources: {}\n  description: {}\n",
                       t.attack_id, t.name, join(matrices), join(t.tactics), join(t.data_sources),
                       trim(t.description));
}

std::string replace_all(std::string text, const std::string& from, const std::string& to)
{
    for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
    return text;
}

coverage::AssessmentRecord placeholder_record(const stix::TechniqueRecord& t, const kb::DatasetProfile& profile,
                                              const std::string& assessor_id, const std::string& key,
                                              coverage::RecordStatus status, std::string rationale,
                                              const coverage::LabelThresholds& thresholds)
{
    coverage::AssessmentRecord r;
    r.attack_id = t.attack_id;
    r.dataset_name = profile.name;
    r.assessor_id = assessor_id;
    r.cache_key = key;
    r.status = status;
    r.rationale = std::move(rationale);
    coverage::finalize(r, thresholds);
    // An all-Unknown vector scores 0 with five unknowns; force the label regardless of thresholds.
    r.label = coverage::Label::Unknown;
    return r;
}

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path;
};

ParsedUrl split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw UsageError("endpoint '" + url + "' is not an absolute URL");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(const HttpResponse& r)
{
    return r.status == 0 || r.status == 408 || r.status == 429 || r.status >= 500;
}

class GenericAdapter : public ProviderAdapter {
public:
    HttpRequest build_request(const ModelServiceConfig& c, const std::string& prompt,
                              const std::string& api_key) const override
    {
        HttpRequest req;
        req.url = c.endpoint;
        req.body = json{{"model", c.model_name}, {"temperature", c.temperature}, {"prompt", prompt}}.dump();
        if (!api_key.empty()) {
            req.headers.emplace_back("Authorization", "Bearer " + api_key);
        }
        return req;
    }

    std::string extract_text(const std::string& body) const override
    {
        const json j = json::parse(body, nullptr, false);
        if (j.is_object() && j.contains("text") && j["text"].is_string()) {
            return j["text"].get<std::string>();
        }
        throw MalformedResponse("response has no string \"text\" field");
    }
};

class AnthropicAdapter : public ProviderAdapter {
public:
    HttpRequest build_request(const ModelServiceConfig& c, const std::string& prompt,
                              const std::string& api_key) const override
    {
        HttpRequest req;
        req.url = c.endpoint;
        req.body = json{{"model", c.model_name},
                        {"max_tokens", 4096},
                        {"temperature", c.temperature},
                        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}}
                       .dump();
        req.headers.emplace_back("anthropic-version", "2023-06-01");
        if (!api_key.empty()) {
            req.headers.emplace_back("x-api-key", api_key);
        }
        return req;
    }

    std::string extract_text(const std::string& body) const override
    {
        const json j = json::parse(body, nullptr, false);
        std::string text;
        if (j.is_object() && j.contains("content") && j["content"].is_array()) {
            for (const auto& block : j["content"]) {
                if (block.value("type", "") == "text" && block.contains("text") && block["text"].is_string()) {
                    text += block["text"].get<std::string>();
                }
            }
            return text;
        }
        throw MalformedResponse("response has no \"content\" array");
    }
};

class GeminiAdapter : public ProviderAdapter {
public:
    HttpRequest build_request(const ModelServiceConfig& c, const std::string& prompt,
                              const std::string& api_key) const override
    {
        HttpRequest req;
        req.url = c.endpoint;
        req.body = json{{"contents", json::array({{{"parts", json::array({{{"text", prompt}}})}}})},
                        {"generationConfig", {{"temperature", c.temperature}}}}
                       .dump();
        if (!api_key.empty()) {
            req.headers.emplace_back("x-goog-api-key", api_key);
        }
        return req;
    }

    std::string extract_text(const std::string& body) const override
    {
        const json j = json::parse(body, nullptr, false);
        try {
            std::string text;
            for (const auto& part : j.at("candidates").at(0).at("content").at("parts")) {
                text += part.at("text").get<std::string>();
            }
            return text;
        } catch (const json::exception&) {
            throw MalformedResponse("response has no candidates[0].content.parts text");
        }
    }
};

}  // namespace

// ---------------------------------------------------------------------------

std::string ModelServiceConfig::effective_assessor_id() const
{
    return assessor_id.empty() ? "remote:" + provider + ":" + model_name : assessor_id;
}

void ModelServiceConfig::validate() const
{
    if (endpoint.empty()) throw SchemaViolation("model service: endpoint is required");
    if (model_name.empty()) throw SchemaViolation("model service: model_name is required");
    if (!(temperature >= 0.0)) throw SchemaViolation("model service: temperature must be >= 0");
    if (batch_size < 1) throw SchemaViolation("model service: batch_size must be >= 1");
    if (max_retries < 0) throw SchemaViolation("model service: max_retries must be >= 0");
    if (rate_limit_requests < 1 || !(rate_limit_window_seconds > 0.0)) {
        throw SchemaViolation("model service: rate limit must allow at least one request per positive window");
    }
    if (cache_dir.empty()) throw SchemaViolation("model service: cache_dir is required");
}

ModelServiceConfig ModelServiceConfig::from_json(const json& j)
{
    ModelServiceConfig c;
    try {
        c.provider = j.value("provider", c.provider);
        c.endpoint = j.value("endpoint", c.endpoint);
        c.model_name = j.value("model_name", c.model_name);
        c.temperature = j.value("temperature", c.temperature);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_retries = j.value("max_retries", c.max_retries);
        if (j.contains("rate_limit")) {
            c.rate_limit_requests = j.at("rate_limit").value("requests", c.rate_limit_requests);
            c.rate_limit_window_seconds = j.at("rate_limit").value("window_seconds", c.rate_limit_window_seconds);
        }
        c.backoff_initial_seconds = j.value("backoff_initial_seconds", c.backoff_initial_seconds);
        c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
        c.cache_dir = j.value("cache_dir", std::string{});
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.assessor_id = j.value("assessor_id", c.assessor_id);
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("model service: ") + e.what());
    }
    return c;
}

json ModelServiceConfig::to_json() const
{
    return json{{"provider", provider},
                {"endpoint", endpoint},
                {"model_name", model_name},
                {"temperature", temperature},
                {"batch_size", batch_size},
                {"max_retries", max_retries},
                {"rate_limit", {{"requests", rate_limit_requests}, {"window_seconds", rate_limit_window_seconds}}},
                {"backoff_initial_seconds", backoff_initial_seconds},
                {"timeout_seconds", timeout_seconds},
                {"cache_dir", cache_dir.string()},
                {"api_key_env", api_key_env},
                {"assessor_id", effective_assessor_id()}};
}

std::string prompt_template_hash()
{
    return sha256_hex(std::string(kPromptTemplateVersion) + "\n" + kTemplateHeader);
}

std::string render_profile(const kb::DatasetProfile& p)
{
    return fmt::format(
        "name: {}\nyear: {}\ndomain: {}\nindustrial protocols: {}\nenterprise protocols: {}\n"
        "attack classes: {}\nattack scenarios: {}\nfeature granularity: {}\nlimitations: {}\n",
        p.name, p.year, kb::to_string(p.domain), join(p.industrial_protocols), join(p.enterprise_protocols),
        join(p.attack_classes), p.scenario_count, kb::to_string(p.feature_granularity), join(p.limitations));
}

std::string render_prompt(const std::vector<stix::TechniqueRecord>& batch, const kb::DatasetProfile& profile)
{
    std::string techniques;
    for (const auto& t : batch) {
        techniques += render_technique(t);
    }
    std::string prompt = replace_all(kTemplateHeader, "{profile}", render_profile(profile));
    return replace_all(std::move(prompt), "{techniques}", techniques);
}

std::map<std::string, ParsedAssessment> parse_response(const std::string& text,
                                                       const std::vector<std::string>& expected_ids)
{
    const std::set<std::string> expected(expected_ids.begin(), expected_ids.end());
    std::map<std::string, ParsedAssessment> out;

    std::string current;
    std::size_t next_question = 0;
    bool rationale_seen = false;

    auto close_block = [&] {
        if (!current.empty() && next_question != coverage::kCriteriaCount) {
            throw MalformedResponse("technique " + current + " answered " + std::to_string(next_question) +
                                    " of 5 questions");
        }
    };

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        const std::string line = trim(raw);
        if (line.empty()) {
            continue;
        }
        if (line.rfind("TECHNIQUE ", 0) == 0) {
            close_block();
            current = trim(line.substr(10));
            if (!expected.count(current)) {
                throw MalformedResponse("unexpected technique '" + current + "'");
            }
            if (out.count(current)) {
                throw MalformedResponse("technique " + current + " answered twice");
            }
            out[current] = {};
            next_question = 0;
            rationale_seen = false;
            continue;
        }
        if (current.empty()) {
            throw MalformedResponse("text before the first TECHNIQUE line: '" + line + "'");
        }
        if (line.rfind("RATIONALE:", 0) == 0) {
            if (next_question != coverage::kCriteriaCount || rationale_seen) {
                throw MalformedResponse("misplaced RATIONALE for " + current);
            }
            out[current].rationale = trim(line.substr(10));
            rationale_seen = true;
            continue;
        }
        const std::string prefix = fmt::format("Q{}:", next_question + 1);
        if (next_question >= coverage::kCriteriaCount || line.rfind(prefix, 0) != 0) {
            throw MalformedResponse("unexpected line for " + current + ": '" + line + "'");
        }
        std::string value = trim(line.substr(prefix.size()));
        std::transform(value.begin(), value.end(), value.begin(), [](unsigned char c) { return std::tolower(c); });
        coverage::Answer answer;
        if (value == "yes") {
            answer = coverage::Answer::Yes;
        } else if (value == "no") {
            answer = coverage::Answer::No;
        } else if (value == "unknown") {
            answer = coverage::Answer::Unknown;
        } else {
            throw MalformedResponse("answer '" + value + "' is not yes/no/unknown");
        }
        out[current].criteria.answers[next_question++] = answer;
    }
    close_block();
    return out;
}

std::string pair_cache_key(const std::string& model_name, const stix::TechniqueRecord& technique,
                           const kb::DatasetProfile& profile)
{
    return sha256_hex(model_name + "\n" + kPromptTemplateVersion + "\n" + render_prompt({technique}, profile));
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::entry_path(const std::string& key) const
{
    return dir_ / "records" / key.substr(0, 2) / (key + ".json");
}

std::optional<coverage::AssessmentRecord> ResponseCache::lookup(const std::string& key) const
{
    const auto path = entry_path(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        return std::nullopt;
    }
    return coverage::record_from_json(read_json_file(path));
}

void ResponseCache::store(const std::string& key, const coverage::AssessmentRecord& record) const
{
    const auto path = entry_path(key);
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
        return;
    }
    write_json_file(path, coverage::to_json(record));
}

std::filesystem::path ResponseCache::archive_raw(const std::string& text) const
{
    const auto path = dir_ / "raw" / (sha256_hex(text) + ".txt");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        write_text_file_atomic(path, text);
    }
    return path;
}

// ---------------------------------------------------------------------------

HttpTransport::HttpTransport(double timeout_seconds) : timeout_seconds_(timeout_seconds) {}

HttpResponse HttpTransport::post(const HttpRequest& request)
{
    const ParsedUrl url = split_url(request.url);
    httplib::Client client(url.scheme_host_port);
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(timeout_seconds_ * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) {
        headers.emplace(k, v);
    }
    auto res = client.Post(url.path, headers, request.body, "application/json");
    if (!res) {
        return {0, {}, httplib::to_string(res.error())};
    }
    return {res->status, res->body, {}};
}

std::unique_ptr<ProviderAdapter> make_adapter(const std::string& provider)
{
    if (provider == "generic") return std::make_unique<GenericAdapter>();
    if (provider == "anthropic") return std::make_unique<AnthropicAdapter>();
    if (provider == "gemini") return std::make_unique<GeminiAdapter>();
    throw UsageError("unknown model provider '" + provider + "' (expected generic, anthropic or gemini)");
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(int max_requests, std::chrono::steady_clock::duration window, Clock clock)
    : max_requests_(max_requests), window_(window), clock_(std::move(clock))
{
}

void RateLimiter::acquire()
{
    auto now = clock_.now();
    while (!sent_.empty() && now - sent_.front() >= window_) {
        sent_.pop_front();
    }
    if (static_cast<int>(sent_.size()) >= max_requests_) {
        clock_.sleep(sent_.front() + window_ - now);
        now = clock_.now();
        while (!sent_.empty() && now - sent_.front() >= window_) {
            sent_.pop_front();
        }
    }
    sent_.push_back(now);
}

// ---------------------------------------------------------------------------

RemoteAssessor::RemoteAssessor(ModelServiceConfig config, std::shared_ptr<Transport> transport, Clock clock,
                               coverage::LabelThresholds thresholds)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      adapter_(make_adapter(config_.provider)),
      clock_(clock),
      limiter_(config_.rate_limit_requests,
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(config_.rate_limit_window_seconds)),
               clock),
      cache_(config_.cache_dir),
      thresholds_(thresholds)
{
    config_.validate();
}

std::optional<std::string> RemoteAssessor::send_with_retries(const std::string& prompt, RemoteStats& stats,
                                                              std::string& error)
{
    std::string api_key;
    if (!config_.api_key_env.empty()) {
        if (const char* v = std::getenv(config_.api_key_env.c_str())) {
            api_key = v;
        }
    }
    const HttpRequest request = adapter_->build_request(config_, prompt, api_key);

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            ++stats.retries;
            const double delay = config_.backoff_initial_seconds * std::pow(2.0, attempt - 1);
            clock_.sleep(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(delay)));
        }
        limiter_.acquire();
        ++stats.requests;
        const HttpResponse response = transport_->post(request);
        if (response.status >= 200 && response.status < 300) {
            return response.body;
        }
        error = response.status == 0 ? "connection failed: " + response.error
                                     : "HTTP status " + std::to_string(response.status);
        if (!retryable(response)) {
            break;
        }
    }
    return std::nullopt;
}

RemoteResult RemoteAssessor::assess(const std::vector<stix::TechniqueRecord>& techniques,
                                    const kb::DatasetProfile& profile)
{
    RemoteResult result;
    const std::string assessor_id = config_.effective_assessor_id();

    std::vector<std::optional<coverage::AssessmentRecord>> slots(techniques.size());
    std::vector<std::string> keys(techniques.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < techniques.size(); ++i) {
        keys[i] = pair_cache_key(config_.model_name, techniques[i], profile);
        if (auto hit = cache_.lookup(keys[i])) {
            slots[i] = std::move(*hit);
            ++result.stats.cache_hits;
        } else {
            pending.push_back(i);
        }
    }

    const auto batch_size = static_cast<std::size_t>(config_.batch_size);
    for (std::size_t start = 0; start < pending.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, pending.size());
        std::vector<stix::TechniqueRecord> batch;
        std::vector<std::string> ids;
        for (std::size_t k = start; k < end; ++k) {
            batch.push_back(techniques[pending[k]]);
            ids.push_back(techniques[pending[k]].attack_id);
        }
        ++result.stats.batches;

        std::string error;
        const auto body = send_with_retries(render_prompt(batch, profile), result.stats, error);
        if (!body) {
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = pending[k];
                slots[i] = placeholder_record(techniques[i], profile, assessor_id, keys[i],
                                              coverage::RecordStatus::Unassessed, "unassessed: " + error, thresholds_);
                ++result.stats.unassessed;
            }
            continue;
        }

        std::map<std::string, ParsedAssessment> parsed;
        std::string parse_error;
        std::string text;
        try {
            text = adapter_->extract_text(*body);
            parsed = parse_response(text, ids);
        } catch (const MalformedResponse& e) {
            parse_error = e.what();
        }
        std::filesystem::path archived;
        for (std::size_t k = start; k < end; ++k) {
            const std::size_t i = pending[k];
            auto it = parsed.find(techniques[i].attack_id);
            if (it == parsed.end()) {
                if (archived.empty()) {
                    archived = cache_.archive_raw(text.empty() ? *body : text);
                }
                const std::string why = parse_error.empty() ? "technique missing from response" : parse_error;
                slots[i] = placeholder_record(techniques[i], profile, assessor_id, keys[i],
                                              coverage::RecordStatus::Malformed,
                                              "malformed response (" + why + "); raw archived at " +
                                                  archived.filename().string(),
                                              thresholds_);
                ++result.stats.malformed;
                continue;
            }
            coverage::AssessmentRecord r;
            r.attack_id = techniques[i].attack_id;
            r.dataset_name = profile.name;
            r.assessor_id = assessor_id;
            r.criteria = it->second.criteria;
            r.rationale = it->second.rationale;
            r.cache_key = keys[i];
            coverage::finalize(r, thresholds_);
            cache_.store(keys[i], r);
            slots[i] = std::move(r);
        }
    }

    result.records.reserve(slots.size());
    for (auto& s : slots) {
        result.records.push_back(std::move(*s));
    }
    return result;
}

}  // namespace auditor::remote
