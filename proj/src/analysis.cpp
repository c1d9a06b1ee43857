#include "sciq/analysis.hpp"

#include "sciq/voting.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <regex>

namespace sciq {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Length statistics
// ---------------------------------------------------------------------------

namespace {

LengthStats::Entry summarize(const std::vector<std::size_t>& counts) {
    LengthStats::Entry entry;
    entry.count = counts.size();
    if (counts.empty()) return entry;
    for (std::size_t c : counts) entry.mean += static_cast<double>(c);
    entry.mean /= static_cast<double>(counts.size());
    double ss = 0.0;
    for (std::size_t c : counts) {
        double d = static_cast<double>(c) - entry.mean;
        ss += d * d;
    }
    entry.sd = std::sqrt(ss / static_cast<double>(counts.size()));
    return entry;
}

}  // namespace

LengthStats length_stats(std::span<const McqItem> items) {
    std::map<std::string, std::vector<std::size_t>> per_discipline;
    std::vector<std::size_t> all;
    for (const auto& item : items) {
        std::size_t words = word_count(item.question);  // stem only, options excluded
        per_discipline[item.discipline].push_back(words);
        all.push_back(words);
    }
    LengthStats stats;
    for (const auto& [discipline, counts] : per_discipline)
        stats.per_discipline[discipline] = summarize(counts);
    stats.overall = summarize(all);
    return stats;
}

// ---------------------------------------------------------------------------
// Judges
// ---------------------------------------------------------------------------

std::string to_string(ReasoningType type) {
    switch (type) {
        case ReasoningType::NumericalCalculation: return "numerical-calculation";
        case ReasoningType::ModelOrConcept: return "model-or-concept";
        case ReasoningType::CausalMechanism: return "causal-mechanism";
    }
    throw Error("InvalidArgument", "bad ReasoningType");
}

std::string to_string(Validity validity) {
    return validity == Validity::GoodAndClear ? "good-and-clear" : "unanswerable";
}

namespace {

std::string ask_judge(const McqItem& item, const JudgeConfig& judge, Gateway& gateway,
                      const PromptCatalog& prompts, const std::string& template_name) {
    ChatRequest request;
    request.model_id = judge.model_id;
    request.user_prompt = prompts.render(
        template_name,
        {{"QUESTION", item.question}, {"OPTIONS", format_options(item, /*with_fallback=*/false)}});
    request.temperature = judge.temperature;
    request.max_tokens = judge.max_tokens;
    request.sample_epoch = judge.sample_epoch;
    return gateway.complete(request).texts.at(0);
}

// "good and clear" modulo case, hyphens and trailing punctuation.
std::string canonical_reply(const std::string& reply) {
    std::string lowered = to_lower_ascii(trim(reply));
    std::string out;
    for (char c : lowered) {
        if (c == '-' || c == '_') c = ' ';
        out.push_back(c);
    }
    while (!out.empty() && (out.back() == '.' || out.back() == '!')) out.pop_back();
    return normalize_ws(out);
}

}  // namespace

ReasoningType classify_reasoning_type(const McqItem& item, const JudgeConfig& judge,
                                      Gateway& gateway, const PromptCatalog& prompts) {
    std::string reply = canonical_reply(ask_judge(item, judge, gateway, prompts, "reasoning_type"));
    if (reply == "1" || reply == "numerical calculation") return ReasoningType::NumericalCalculation;
    if (reply == "2" || reply == "model or concept") return ReasoningType::ModelOrConcept;
    if (reply == "3" || reply == "causal mechanism") return ReasoningType::CausalMechanism;
    throw Error("JudgeUnparseable", "reasoning-type reply: " + reply);
}

Validity judge_validity(const McqItem& item, const JudgeConfig& judge, Gateway& gateway,
                        const PromptCatalog& prompts) {
    std::string reply = canonical_reply(ask_judge(item, judge, gateway, prompts, "validity"));
    if (reply == "good and clear") return Validity::GoodAndClear;
    if (reply == "unanswerable") return Validity::Unanswerable;
    throw Error("JudgeUnparseable", "validity reply: " + reply);
}

int judge_difficulty(const McqItem& item, const JudgeConfig& judge, Gateway& gateway,
                     const PromptCatalog& prompts) {
    std::string reply = trim(ask_judge(item, judge, gateway, prompts, "difficulty"));
    static const std::regex level_re(R"(^([1-5])\.?$)");
    std::smatch m;
    if (!std::regex_match(reply, m, level_re))
        throw Error("JudgeUnparseable", "difficulty reply: " + reply);
    return m[1].str()[0] - '0';
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct HttpEmbeddingClient::Impl {
    std::string host;
    std::string path_prefix;
    std::string model_id;
    std::string api_key_env;
    std::unique_ptr<httplib::Client> client;
    std::mutex mutex;
};

HttpEmbeddingClient::HttpEmbeddingClient(std::string base_url, std::string model_id,
                                         std::string api_key_env)
    : impl_(std::make_unique<Impl>()) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch match;
    if (!std::regex_match(base_url, match, url_re))
        throw Error("InvalidArgument", "bad embedding base_url: " + base_url);
    impl_->host = match[1].str();
    impl_->path_prefix = match[2].matched ? match[2].str() : "";
    while (!impl_->path_prefix.empty() && impl_->path_prefix.back() == '/')
        impl_->path_prefix.pop_back();
    impl_->model_id = std::move(model_id);
    impl_->api_key_env = std::move(api_key_env);
    impl_->client = std::make_unique<httplib::Client>(impl_->host);
}

HttpEmbeddingClient::~HttpEmbeddingClient() = default;

std::vector<std::vector<float>> HttpEmbeddingClient::embed(std::span<const std::string> texts) {
    json body;
    body["model"] = impl_->model_id;
    body["input"] = std::vector<std::string>(texts.begin(), texts.end());

    httplib::Headers headers = {{"Content-Type", "application/json"}};
    if (!impl_->api_key_env.empty()) {
        const char* key = std::getenv(impl_->api_key_env.c_str());
        if (!key || !*key)
            throw Error("AuthFailure", "credential env var " + impl_->api_key_env + " not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Result result;
    {
        std::lock_guard<std::mutex> lock(impl_->mutex);
        result = impl_->client->Post(impl_->path_prefix + "/embeddings", headers, body.dump(),
                                     "application/json");
    }
    if (!result || result->status != 200)
        throw Error("EmbeddingBackendUnavailable",
                    "embedding request failed" +
                        (result ? " (HTTP " + std::to_string(result->status) + ")" : ""));
    json reply = json::parse(result->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("data"))
        throw Error("EmbeddingBackendUnavailable", "malformed embeddings reply");

    std::vector<std::vector<float>> vectors;
    for (const auto& entry : reply["data"])
        vectors.push_back(entry.at("embedding").get<std::vector<float>>());
    if (vectors.size() != texts.size())
        throw Error("EmbeddingBackendUnavailable", "embedding count mismatch");
    return vectors;
}

StubEmbeddingClient::StubEmbeddingClient(std::size_t dim, bool hash_fallback)
    : dim_(dim), hash_fallback_(hash_fallback) {}

void StubEmbeddingClient::set_embedding(const std::string& text, std::vector<float> vec) {
    scripted_[text] = std::move(vec);
}

std::vector<std::vector<float>> StubEmbeddingClient::embed(std::span<const std::string> texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        auto it = scripted_.find(text);
        if (it != scripted_.end()) {
            out.push_back(it->second);
            continue;
        }
        if (!hash_fallback_)
            throw Error("EmbeddingBackendUnavailable", "no scripted embedding for text");
        // Bag-of-hashed-tokens: identical stems embed identically, unrelated
        // stems land nearly orthogonal.
        std::vector<float> vec(dim_, 0.0f);
        std::size_t start = 0;
        const std::string lowered = to_lower_ascii(text);
        while (start < lowered.size()) {
            std::size_t end = lowered.find_first_of(" \t\n\r", start);
            if (end == std::string::npos) end = lowered.size();
            if (end > start) {
                std::uint64_t h = fnv1a64(std::string_view(lowered).substr(start, end - start));
                vec[h % dim_] += 1.0f;
            }
            start = end + 1;
        }
        out.push_back(std::move(vec));
    }
    return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size() || a.empty()) return 0.0;
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<RedundantPair> redundancy_pairs(std::span<const McqItem> items,
                                            EmbeddingClient& embedder, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw Error("InvalidArgument", "threshold must be in (0, 1]");

    std::map<std::string, std::vector<std::size_t>> by_domain;
    for (std::size_t i = 0; i < items.size(); ++i)
        by_domain[items[i].discipline].push_back(i);

    std::vector<std::string> stems;
    stems.reserve(items.size());
    for (const auto& item : items) stems.push_back(item.question);
    auto vectors = embedder.embed(stems);

    std::vector<RedundantPair> pairs;
    for (const auto& [domain, indices] : by_domain) {
        for (std::size_t a = 0; a < indices.size(); ++a) {
            for (std::size_t b = a + 1; b < indices.size(); ++b) {
                double sim = cosine_similarity(vectors[indices[a]], vectors[indices[b]]);
                if (sim >= threshold)
                    pairs.push_back({items[indices[a]].item_id, items[indices[b]].item_id, sim});
            }
        }
    }
    return pairs;
}

}  // namespace sciq
