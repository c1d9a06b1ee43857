#pragma once
// Uniform chat-completion client: pluggable backends (OpenAI-compatible HTTP,
// scriptable mock), bounded-concurrency batching, retry with exponential
// backoff, and a deterministic content-addressed response cache.
//
// The mock backend is part of the public API so downstream stages can run
// their full test suites with zero network access.

#include "sciq/util.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

namespace sciq {

struct ChatRequest {
    std::string model_id;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;  // must be in [0, 2]
    int max_tokens = 2048;
    int n_samples = 1;  // must be >= 1
    // Distinguishes otherwise-identical sampled requests in the cache key, so
    // stochastic runs are resumable yet can be re-drawn by bumping the epoch.
    std::uint64_t sample_epoch = 0;

    /// Stable content hash over (model_id, prompts, temperature, max_tokens,
    /// n_samples, sample_epoch). Identical across platforms and runs.
    std::string fingerprint() const;

    void validate() const;  // throws Error("InvalidArgument") on bad fields
};

struct ChatResponse {
    std::vector<std::string> texts;  // exactly n_samples entries
    std::string model_id;
    std::string request_fingerprint;
};

/// One slot of a batch result; per-request failures are reported in-position
/// without aborting the batch.
struct CompletionOutcome {
    std::optional<ChatResponse> response;
    std::string error_code;
    std::string error_message;

    bool ok() const { return response.has_value(); }
};

// Error codes thrown by backends / the gateway:
//   BackendUnavailable   no backend for the model, or retries exhausted
//   MalformedBackendReply protocol violation in the reply (never retried)
//   AuthFailure          credential rejected (never retried)
//   Transport, ServerBusy transient transport/5xx classes (retried)

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Mock backend: scriptable per-prompt-pattern replies plus instrumentation
// (call counter, concurrency high-water mark, scripted failures).
// ---------------------------------------------------------------------------

class MockBackend : public ChatBackend {
public:
    struct Rule {
        std::string model_id;      // empty = any model
        std::string pattern_text;  // ECMAScript regex, searched in system+user prompt
        std::vector<std::string> replies;
        // Reply selection: replies[(sample_epoch + sample_index) % size] by
        // default; with by_call_order the rule's own call counter is used
        // instead (intentionally stateful, for cache tests).
        bool by_call_order = false;
        int fail_first = 0;            // first N matching calls throw fail_code
        bool fail_always = false;
        std::string fail_code = "Transport";
    };

    MockBackend() = default;

    void add_rule(Rule rule);
    void add_reply(const std::string& pattern, std::string reply);  // convenience
    void set_default_reply(std::string reply) { default_reply_ = std::move(reply); }
    void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

    /// Script format: {"default_reply": "...", "rules": [{"model": "...",
    /// "pattern": "...", "replies": ["..."], "fail_first": 0, ...}]}
    static std::shared_ptr<MockBackend> from_script(const nlohmann::json& script);
    static std::shared_ptr<MockBackend> from_script_file(const std::filesystem::path& path);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "mock"; }

    int call_count() const { return calls_.load(); }
    int peak_concurrency() const { return peak_.load(); }
    void reset_counters();

private:
    struct CompiledRule {
        Rule rule;
        std::regex pattern;
        std::atomic<int> calls{0};
        CompiledRule(Rule r) : rule(std::move(r)), pattern(rule.pattern_text) {}
    };

    std::string pick_reply(CompiledRule& rule, const ChatRequest& request, int sample_index);

    std::vector<std::unique_ptr<CompiledRule>> rules_;
    std::string default_reply_;
    std::chrono::milliseconds latency_{0};
    std::atomic<int> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP backend. POSTs {model, messages, temperature, n,
// max_tokens} to <base_url><path_prefix>/chat/completions and reads
// choices[*].message.content. Credentials come from the environment variable
// named in the config; the config never stores the secret itself.
// ---------------------------------------------------------------------------

struct HttpBackendConfig {
    std::string base_url;     // e.g. "http://localhost:8000/v1"
    std::string api_key_env;  // name of env var holding the bearer token
    int timeout_seconds = 120;
};

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "openai:" + config_.base_url; }

private:
    HttpBackendConfig config_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Cache: one JSON file per request fingerprint under a directory. Writes are
// atomic (temp + rename); a hit returns byte-identical texts.
// ---------------------------------------------------------------------------

class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<ChatResponse> lookup(const std::string& fingerprint) const;
    void store_response(const std::string& fingerprint, const ChatResponse& response);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};  // delay before attempt k is base * 2^(k-1)
    double jitter = 0.1;                         // +/- fraction applied to each delay
};

class Gateway {
public:
    Gateway() = default;

    void register_backend(const std::string& model_id, std::shared_ptr<ChatBackend> backend);
    void set_cache(std::shared_ptr<ResponseCache> cache) { cache_ = std::move(cache); }
    void set_retry_policy(RetryPolicy policy) { retry_ = policy; }

    bool has_backend(const std::string& model_id) const;

    /// Single completion with caching and retries. Throws on failure.
    ChatResponse complete(const ChatRequest& request);

    /// Positionally aligned batch with at most max_in_flight requests
    /// outstanding at any instant. Per-item failures are embedded.
    std::vector<CompletionOutcome> complete_batch(std::span<const ChatRequest> requests,
                                                  int max_in_flight);

private:
    ChatResponse complete_uncached(ChatBackend& backend, const ChatRequest& request);

    std::map<std::string, std::shared_ptr<ChatBackend>> backends_;
    std::shared_ptr<ResponseCache> cache_;
    RetryPolicy retry_;
};

}  // namespace sciq
