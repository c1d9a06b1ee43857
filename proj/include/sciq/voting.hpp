#pragma once
// Ensemble model voting with an unanswerable fallback option, agreement
// classification against the synthetic label, and dataset partitioning.

#include "sciq/gateway.hpp"
#include "sciq/item.hpp"
#include "sciq/prompts.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sciq {

/// Text of the fallback option appended after the last real option.
inline constexpr const char* kUnanswerableOptionText =
    "None of the above / The question is unanswerable";

struct Vote {
    std::string item_id;
    std::string model_id;
    int sample_index = 0;
    std::optional<char> choice;  // nullopt = UNANSWERABLE
    bool unextracted = false;    // no parseable choice in the raw reply
    std::string raw_text;

    bool unanswerable() const { return !choice.has_value(); }
};

/// Option listing "A. ...\nB. ..." for prompt templates.
std::string format_options(const McqItem& item, bool with_fallback);

/// Question + all options + the fallback option labeled with the next
/// letter, rendered through the "answer" template.
std::string build_vote_prompt(const McqItem& item, const PromptCatalog& prompts);

struct VotingConfig {
    std::vector<std::string> ensemble;  // model ids, non-empty
    int samples_per_model = 4;
    double temperature = 0.8;
    int max_tokens = 2048;
    std::uint64_t sample_epoch_base = 0;
    int max_in_flight = 4;
};

/// |ensemble| x samples_per_model votes; one request per (model, sample) so
/// failures surface as single unextracted UNANSWERABLE votes and cached runs
/// resume per sample. Never aborts the item.
std::vector<Vote> collect_votes(const McqItem& item, const VotingConfig& config,
                                Gateway& gateway, const PromptCatalog& prompts);

/// Rule order (N = |votes|, count(c) = votes choosing c):
///   1. count(UNANSWERABLE) > N/2          -> Discarded
///   2. count(y_syn) = N                   -> AllAligned
///   3. count(y_syn) > N/2                 -> MajorityAligned
///   4. count(c) > N/2 for some c != y_syn -> MajorityDivergent
///   5. otherwise                          -> AllDivergent
/// Majorities are strict; exactly-half ties fall through to AllDivergent.
/// Throws Error("EmptyVotes") on empty input.
AgreementClass classify_agreement(std::span<const Vote> votes, char y_syn);

struct PartitionResult {
    std::map<AgreementClass, std::vector<McqItem>> groups;
    std::map<AgreementClass, std::size_t> counts() const;
    std::size_t total() const;
};

/// Classify every item and bucket it; each input lands in exactly one class
/// list (items come back with agreement_class set).
PartitionResult partition(std::span<const std::pair<McqItem, std::vector<Vote>>> items_with_votes);

// Vote log records: line-delimited JSON (item_id, model_id, sample_index,
// choice, unextracted) for audit and resumption.
std::string vote_to_json_line(const Vote& vote);
Vote vote_from_json_line(const std::string& line);
void save_votes(const std::filesystem::path& path, std::span<const Vote> votes);
std::vector<Vote> load_votes(const std::filesystem::path& path);

}  // namespace sciq
