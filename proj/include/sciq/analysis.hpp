#pragma once
// Dataset analytics: question-length statistics, judge-based reasoning-type
// and validity/difficulty ratings, and embedding-based redundancy pairs.

#include "sciq/eval.hpp"
#include "sciq/gateway.hpp"
#include "sciq/item.hpp"
#include "sciq/prompts.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sciq {

struct LengthStats {
    struct Entry {
        std::size_t count = 0;
        double mean = 0.0;
        double sd = 0.0;  // population
    };
    std::map<std::string, Entry> per_discipline;
    Entry overall;
};

/// Word counts of question stems only (options excluded).
LengthStats length_stats(std::span<const McqItem> items);

enum class ReasoningType { NumericalCalculation, ModelOrConcept, CausalMechanism };

std::string to_string(ReasoningType type);

struct JudgeConfig {
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 64;
    std::uint64_t sample_epoch = 0;
};

/// Single-label classification through the reasoning_type template. The
/// judge must reply "1", "2" or "3" (or a canonical slug); anything else is
/// Error("JudgeUnparseable").
ReasoningType classify_reasoning_type(const McqItem& item, const JudgeConfig& judge,
                                      Gateway& gateway, const PromptCatalog& prompts);

enum class Validity { GoodAndClear, Unanswerable };

std::string to_string(Validity validity);

/// Two-way rating via the validity template ("good and clear" /
/// "unanswerable"); Error("JudgeUnparseable") otherwise.
Validity judge_validity(const McqItem& item, const JudgeConfig& judge, Gateway& gateway,
                        const PromptCatalog& prompts);

/// Five-level rating via the difficulty rubric; replies outside 1..5 are
/// Error("JudgeUnparseable").
int judge_difficulty(const McqItem& item, const JudgeConfig& judge, Gateway& gateway,
                     const PromptCatalog& prompts);

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
};

/// OpenAI-compatible embeddings endpoint (POST <base>/embeddings).
class HttpEmbeddingClient : public EmbeddingClient {
public:
    HttpEmbeddingClient(std::string base_url, std::string model_id, std::string api_key_env);
    ~HttpEmbeddingClient() override;
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Deterministic stand-in: scripted vectors per exact text, with an optional
/// token-hash fallback so identical stems embed identically without a model.
class StubEmbeddingClient : public EmbeddingClient {
public:
    explicit StubEmbeddingClient(std::size_t dim = 64, bool hash_fallback = true);
    void set_embedding(const std::string& text, std::vector<float> vec);
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
    bool hash_fallback_;
    std::map<std::string, std::vector<float>> scripted_;
};

double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct RedundantPair {
    std::string item_id_a;
    std::string item_id_b;
    double similarity = 0.0;
};

/// Same-domain stem pairs with cosine similarity >= threshold. Each
/// unordered pair reported once; self-pairs excluded; threshold in (0, 1].
std::vector<RedundantPair> redundancy_pairs(std::span<const McqItem> items,
                                            EmbeddingClient& embedder, double threshold);

}  // namespace sciq
