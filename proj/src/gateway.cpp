#include "sciq/gateway.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace sciq {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ChatRequest
// ---------------------------------------------------------------------------

void ChatRequest::validate() const {
    if (model_id.empty()) throw Error("InvalidArgument", "model_id is empty");
    if (temperature < 0.0 || temperature > 2.0)
        throw Error("InvalidArgument", "temperature must be in [0, 2]");
    if (n_samples < 1) throw Error("InvalidArgument", "n_samples must be >= 1");
    if (max_tokens < 1) throw Error("InvalidArgument", "max_tokens must be >= 1");
}

std::string ChatRequest::fingerprint() const {
    return stable_hash_hex({
        model_id,
        system_prompt,
        user_prompt,
        canonical_double(temperature),
        std::to_string(max_tokens),
        std::to_string(n_samples),
        std::to_string(sample_epoch),
    });
}

// ---------------------------------------------------------------------------
// MockBackend
// ---------------------------------------------------------------------------

void MockBackend::add_rule(Rule rule) {
    rules_.push_back(std::make_unique<CompiledRule>(std::move(rule)));
}

void MockBackend::add_reply(const std::string& pattern, std::string reply) {
    Rule rule;
    rule.pattern_text = pattern;
    rule.replies.push_back(std::move(reply));
    add_rule(std::move(rule));
}

std::shared_ptr<MockBackend> MockBackend::from_script(const json& script) {
    auto mock = std::make_shared<MockBackend>();
    if (script.contains("default_reply"))
        mock->set_default_reply(script.at("default_reply").get<std::string>());
    if (script.contains("latency_ms"))
        mock->set_latency(std::chrono::milliseconds(script.at("latency_ms").get<int>()));
    for (const auto& entry : script.value("rules", json::array())) {
        Rule rule;
        rule.model_id = entry.value("model", "");
        rule.pattern_text = entry.at("pattern").get<std::string>();
        if (entry.contains("replies"))
            rule.replies = entry.at("replies").get<std::vector<std::string>>();
        else if (entry.contains("reply"))
            rule.replies.push_back(entry.at("reply").get<std::string>());
        rule.by_call_order = entry.value("by_call_order", false);
        rule.fail_first = entry.value("fail_first", 0);
        rule.fail_always = entry.value("fail_always", false);
        rule.fail_code = entry.value("fail_code", "Transport");
        mock->add_rule(std::move(rule));
    }
    return mock;
}

std::shared_ptr<MockBackend> MockBackend::from_script_file(const std::filesystem::path& path) {
    json script;
    try {
        script = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("SchemaViolation", "bad mock script " + path.string() + ": " + e.what());
    }
    return from_script(script);
}

std::string MockBackend::pick_reply(CompiledRule& rule, const ChatRequest& request,
                                    int sample_index) {
    const auto& replies = rule.rule.replies;
    if (replies.empty()) return default_reply_;
    std::size_t index;
    if (rule.rule.by_call_order) {
        index = static_cast<std::size_t>(rule.calls.fetch_add(1)) % replies.size();
    } else {
        index = static_cast<std::size_t>((request.sample_epoch + sample_index) % replies.size());
    }
    return replies[index];
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
    calls_.fetch_add(1);
    int now = in_flight_.fetch_add(1) + 1;
    int prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    struct Guard {
        std::atomic<int>& counter;
        ~Guard() { counter.fetch_sub(1); }
    } guard{in_flight_};

    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

    const std::string haystack = request.system_prompt + "\n" + request.user_prompt;
    for (auto& compiled : rules_) {
        const Rule& rule = compiled->rule;
        if (!rule.model_id.empty() && rule.model_id != request.model_id) continue;
        if (!std::regex_search(haystack, compiled->pattern)) continue;

        if (rule.fail_always) throw Error(rule.fail_code, "scripted failure: " + rule.pattern_text);
        if (rule.fail_first > 0) {
            int n = compiled->calls.fetch_add(1);
            if (n < rule.fail_first)
                throw Error(rule.fail_code, "scripted failure " + std::to_string(n + 1) + "/" +
                                                std::to_string(rule.fail_first));
            ChatResponse response;
            response.model_id = request.model_id;
            for (int i = 0; i < request.n_samples; ++i)
                response.texts.push_back(rule.replies.empty()
                                             ? default_reply_
                                             : rule.replies[(request.sample_epoch + i) %
                                                            rule.replies.size()]);
            return response;
        }

        ChatResponse response;
        response.model_id = request.model_id;
        for (int i = 0; i < request.n_samples; ++i)
            response.texts.push_back(pick_reply(*compiled, request, i));
        return response;
    }

    if (default_reply_.empty())
        throw Error("MalformedBackendReply", "mock has no rule for prompt and no default reply");
    ChatResponse response;
    response.model_id = request.model_id;
    response.texts.assign(static_cast<std::size_t>(request.n_samples), default_reply_);
    return response;
}

void MockBackend::reset_counters() {
    calls_.store(0);
    peak_.store(0);
    for (auto& rule : rules_) rule->calls.store(0);
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

struct HttpBackend::Impl {
    std::string host;         // scheme://host[:port]
    std::string path_prefix;  // e.g. "/v1"
    std::unique_ptr<httplib::Client> client;
    std::mutex mutex;
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch match;
    if (!std::regex_match(config_.base_url, match, url_re))
        throw Error("InvalidArgument", "bad backend base_url: " + config_.base_url);
    impl_->host = match[1].str();
    impl_->path_prefix = match[2].matched ? match[2].str() : "";
    while (!impl_->path_prefix.empty() && impl_->path_prefix.back() == '/')
        impl_->path_prefix.pop_back();
    impl_->client = std::make_unique<httplib::Client>(impl_->host);
    impl_->client->set_connection_timeout(config_.timeout_seconds);
    impl_->client->set_read_timeout(config_.timeout_seconds);
}

HttpBackend::~HttpBackend() = default;

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    json body;
    body["model"] = request.model_id;
    body["messages"] = json::array();
    if (!request.system_prompt.empty())
        body["messages"].push_back({{"role", "system"}, {"content", request.system_prompt}});
    body["messages"].push_back({{"role", "user"}, {"content", request.user_prompt}});
    body["temperature"] = request.temperature;
    body["n"] = request.n_samples;
    body["max_tokens"] = request.max_tokens;

    httplib::Headers headers = {{"Content-Type", "application/json"}};
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key || !*key)
            throw Error("AuthFailure",
                        "credential env var " + config_.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Result result;
    {
        // httplib clients are not safe for concurrent requests on one socket.
        std::lock_guard<std::mutex> lock(impl_->mutex);
        result = impl_->client->Post(impl_->path_prefix + "/chat/completions", headers,
                                     body.dump(), "application/json");
    }
    if (!result)
        throw Error("Transport", "connection to " + impl_->host + " failed: " +
                                     httplib::to_string(result.error()));
    if (result->status == 401 || result->status == 403)
        throw Error("AuthFailure", "backend rejected credentials (HTTP " +
                                       std::to_string(result->status) + ")");
    if (result->status == 429 || result->status >= 500)
        throw Error("ServerBusy", "HTTP " + std::to_string(result->status) + " from backend");
    if (result->status != 200)
        throw Error("BackendUnavailable",
                    "HTTP " + std::to_string(result->status) + " from backend: " + result->body);

    json reply;
    try {
        reply = json::parse(result->body);
    } catch (const json::exception& e) {
        throw Error("MalformedBackendReply", std::string("reply is not JSON: ") + e.what());
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
        throw Error("MalformedBackendReply", "reply lacks choices");

    ChatResponse response;
    response.model_id = request.model_id;
    for (const auto& choice : reply["choices"]) {
        if (!choice.contains("message") || !choice["message"].contains("content"))
            throw Error("MalformedBackendReply", "choice lacks message.content");
        response.texts.push_back(choice["message"]["content"].get<std::string>());
    }
    if (static_cast<int>(response.texts.size()) != request.n_samples)
        throw Error("MalformedBackendReply",
                    "expected " + std::to_string(request.n_samples) + " choices, got " +
                        std::to_string(response.texts.size()));
    return response;
}

// ---------------------------------------------------------------------------
// ResponseCache
// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::optional<ChatResponse> ResponseCache::lookup(const std::string& fingerprint) const {
    std::filesystem::path file = dir_ / (fingerprint + ".json");
    std::lock_guard<std::mutex> lock(mutex_);
    if (!std::filesystem::exists(file)) return std::nullopt;
    try {
        json entry = json::parse(read_file(file));
        ChatResponse response;
        response.model_id = entry.at("model_id").get<std::string>();
        response.texts = entry.at("texts").get<std::vector<std::string>>();
        response.request_fingerprint = fingerprint;
        return response;
    } catch (const std::exception&) {
        return std::nullopt;  // torn or foreign file: treat as a miss
    }
}

void ResponseCache::store_response(const std::string& fingerprint, const ChatResponse& response) {
    json entry;
    entry["fingerprint"] = fingerprint;
    entry["model_id"] = response.model_id;
    entry["texts"] = response.texts;
    std::lock_guard<std::mutex> lock(mutex_);
    atomic_write_file(dir_ / (fingerprint + ".json"), entry.dump());
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

void Gateway::register_backend(const std::string& model_id, std::shared_ptr<ChatBackend> backend) {
    backends_[model_id] = std::move(backend);
}

bool Gateway::has_backend(const std::string& model_id) const {
    return backends_.count(model_id) > 0;
}

namespace {

bool retryable(const std::string& code) { return code == "Transport" || code == "ServerBusy"; }

}  // namespace

ChatResponse Gateway::complete_uncached(ChatBackend& backend, const ChatRequest& request) {
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        try {
            ChatResponse response = backend.complete(request);
            if (static_cast<int>(response.texts.size()) != request.n_samples)
                throw Error("MalformedBackendReply",
                            "backend returned " + std::to_string(response.texts.size()) +
                                " texts for n_samples=" + std::to_string(request.n_samples));
            return response;
        } catch (const Error& e) {
            if (!retryable(e.code())) throw;
            last_error = e.what();
            if (attempt == retry_.max_attempts) break;
            auto delay = retry_.base_delay * (1LL << (attempt - 1));
            if (retry_.jitter > 0.0) {
                thread_local std::mt19937_64 jitter_rng(std::random_device{}());
                double lo = 1.0 - retry_.jitter;
                double hi = 1.0 + retry_.jitter;
                double f = lo + (hi - lo) * (static_cast<double>(jitter_rng()) /
                                             static_cast<double>(UINT64_MAX));
                delay = std::chrono::milliseconds(
                    static_cast<std::int64_t>(static_cast<double>(delay.count()) * f));
            }
            std::this_thread::sleep_for(delay);
        }
    }
    throw Error("BackendUnavailable",
                "retries exhausted after " + std::to_string(retry_.max_attempts) +
                    " attempts; last error: " + last_error);
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    request.validate();
    auto it = backends_.find(request.model_id);
    if (it == backends_.end())
        throw Error("BackendUnavailable", "no backend configured for model " + request.model_id);

    const std::string fingerprint = request.fingerprint();
    if (cache_) {
        if (auto hit = cache_->lookup(fingerprint)) return *hit;
    }
    ChatResponse response = complete_uncached(*it->second, request);
    response.request_fingerprint = fingerprint;
    if (cache_) cache_->store_response(fingerprint, response);
    return response;
}

std::vector<CompletionOutcome> Gateway::complete_batch(std::span<const ChatRequest> requests,
                                                       int max_in_flight) {
    if (max_in_flight < 1) throw Error("InvalidArgument", "max_in_flight must be >= 1");
    std::vector<CompletionOutcome> outcomes(requests.size());
    if (requests.empty()) return outcomes;

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                outcomes[i].response = complete(requests[i]);
            } catch (const Error& e) {
                outcomes[i].error_code = e.code();
                outcomes[i].error_message = e.what();
            } catch (const std::exception& e) {
                outcomes[i].error_code = "Internal";
                outcomes[i].error_message = e.what();
            }
        }
    };

    std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight),
                                                  requests.size());
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return outcomes;
}

}  // namespace sciq
