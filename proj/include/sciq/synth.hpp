#pragma once
// Question synthesis: draft 4-option items from a paper, then refinement into
// hardened 10-option items. Model replies are JSON payloads, parsed leniently
// (code fences and surrounding prose tolerated) and validated strictly.

#include "sciq/corpus.hpp"
#include "sciq/gateway.hpp"
#include "sciq/item.hpp"
#include "sciq/prompts.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sciq {

/// Unvalidated fields lifted from one reply object.
struct ItemCandidate {
    std::string question;
    std::vector<std::pair<std::string, std::string>> options;  // (label, text) as given
    std::string answer;
    std::string rationale;
};

/// Extract the first well-formed JSON array of objects from raw model output
/// (a lone top-level object is accepted as a 1-element array). Throws
/// Error("NoStructuredPayload") when no complete payload exists.
std::vector<ItemCandidate> parse_item_reply(const std::string& reply_text);

/// Validate a candidate into an McqItem. Checks label contiguity from 'A',
/// the expected option count, a single in-range answer letter, distinct
/// non-empty option texts. Returns std::nullopt and fills *reason on failure.
std::optional<McqItem> candidate_to_item(const ItemCandidate& candidate, const McqItem& meta,
                                         ItemStage stage, std::size_t expected_options,
                                         std::string* reason);

struct GenerationConfig {
    std::string model_id;
    double temperature = 0.8;
    int max_tokens = 4096;
    int questions_per_paper = 3;
    std::uint64_t sample_epoch = 0;
};

struct GenerationResult {
    std::vector<McqItem> items;  // stage = draft, at most questions_per_paper
    std::size_t parsed = 0;      // candidates seen in the reply
    std::size_t dropped = 0;     // candidates failing validation
    std::vector<std::string> drop_reasons;
};

/// Draft 4-option items for one paper via the qa_generation template.
/// Throws Error("GenerationEmpty") when the reply yields zero valid items;
/// callers treat that as a per-paper report, not a batch failure.
GenerationResult generate_qas(const Paper& paper, const GenerationConfig& config,
                              Gateway& gateway, const PromptCatalog& prompts);

struct RefineConfig {
    std::string model_id;
    double temperature = 0.8;
    int max_tokens = 4096;
    int max_retries = 2;  // attempts = 1 + max_retries, each on a fresh sample_epoch
    std::uint64_t sample_epoch = 0;
};

/// Refine a draft into a 10-option item (labels A-J, paraphrased question,
/// lineage extended by one). Rejects replies whose question is verbatim-equal
/// to the draft after whitespace normalization. Throws
/// Error("RefinementFailed") once retries are exhausted.
McqItem refine(const McqItem& draft, const RefineConfig& config, Gateway& gateway,
               const PromptCatalog& prompts);

/// JSON payload for one item as fed to the refinement prompt.
std::string item_payload_json(const McqItem& item);

}  // namespace sciq
