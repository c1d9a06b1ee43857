#include "sciq/voting.hpp"

#include "sciq/eval.hpp"

#include <set>

namespace sciq {

using nlohmann::json;

std::string format_options(const McqItem& item, bool with_fallback) {
    std::string out;
    for (std::size_t i = 0; i < item.options.size(); ++i) {
        out += item.label_at(i);
        out += ". ";
        out += item.options[i];
        out += '\n';
    }
    if (with_fallback) {
        out += static_cast<char>('A' + item.options.size());
        out += ". ";
        out += kUnanswerableOptionText;
        out += '\n';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string build_vote_prompt(const McqItem& item, const PromptCatalog& prompts) {
    if (item.options.empty())
        throw Error("InvalidArgument", "cannot build a vote prompt for an item with no options");
    return prompts.render("answer", {{"QUESTION", item.question},
                                     {"OPTIONS", format_options(item, /*with_fallback=*/true)}});
}

std::vector<Vote> collect_votes(const McqItem& item, const VotingConfig& config,
                                Gateway& gateway, const PromptCatalog& prompts) {
    if (config.ensemble.empty()) throw Error("InvalidArgument", "ensemble must be non-empty");
    if (config.samples_per_model < 1)
        throw Error("InvalidArgument", "samples_per_model must be >= 1");

    const std::string prompt = build_vote_prompt(item, prompts);
    const char fallback_label = static_cast<char>('A' + item.options.size());
    const auto labels = item.label_set();
    std::set<char> allowed(labels.begin(), labels.end());
    allowed.insert(fallback_label);

    std::vector<ChatRequest> requests;
    requests.reserve(config.ensemble.size() * static_cast<std::size_t>(config.samples_per_model));
    for (const auto& model : config.ensemble) {
        for (int s = 0; s < config.samples_per_model; ++s) {
            ChatRequest request;
            request.model_id = model;
            request.user_prompt = prompt;
            request.temperature = config.temperature;
            request.max_tokens = config.max_tokens;
            request.sample_epoch = config.sample_epoch_base + static_cast<std::uint64_t>(s);
            requests.push_back(std::move(request));
        }
    }

    auto outcomes = gateway.complete_batch(requests, config.max_in_flight);

    std::vector<Vote> votes;
    votes.reserve(requests.size());
    std::size_t slot = 0;
    for (const auto& model : config.ensemble) {
        for (int s = 0; s < config.samples_per_model; ++s, ++slot) {
            Vote vote;
            vote.item_id = item.item_id;
            vote.model_id = model;
            vote.sample_index = s;
            const auto& outcome = outcomes[slot];
            if (!outcome.ok()) {
                // Backend failure: recorded as an unextracted UNANSWERABLE vote.
                vote.unextracted = true;
                vote.raw_text = "";
            } else {
                vote.raw_text = outcome.response->texts.at(0);
                auto extracted = extract_answer(vote.raw_text, allowed);
                if (!extracted) {
                    vote.unextracted = true;
                } else if (*extracted == fallback_label) {
                    vote.choice = std::nullopt;
                } else {
                    vote.choice = *extracted;
                }
            }
            votes.push_back(std::move(vote));
        }
    }
    return votes;
}

AgreementClass classify_agreement(std::span<const Vote> votes, char y_syn) {
    if (votes.empty()) throw Error("EmptyVotes", "classify_agreement requires votes");
    const std::size_t n = votes.size();

    std::size_t unanswerable = 0;
    std::map<char, std::size_t> counts;
    for (const auto& vote : votes) {
        if (vote.unanswerable()) {
            ++unanswerable;
        } else {
            ++counts[*vote.choice];
        }
    }
    const std::size_t y_count = counts.count(y_syn) ? counts[y_syn] : 0;

    // Strict majority: 2*count > n. The discard check precedes alignment.
    if (2 * unanswerable > n) return AgreementClass::Discarded;
    if (y_count == n) return AgreementClass::AllAligned;
    if (2 * y_count > n) return AgreementClass::MajorityAligned;
    for (const auto& [label, count] : counts) {
        if (label != y_syn && 2 * count > n) return AgreementClass::MajorityDivergent;
    }
    return AgreementClass::AllDivergent;
}

std::map<AgreementClass, std::size_t> PartitionResult::counts() const {
    std::map<AgreementClass, std::size_t> out;
    for (const auto& [cls, items] : groups) out[cls] = items.size();
    return out;
}

std::size_t PartitionResult::total() const {
    std::size_t sum = 0;
    for (const auto& [cls, items] : groups) sum += items.size();
    return sum;
}

PartitionResult partition(
    std::span<const std::pair<McqItem, std::vector<Vote>>> items_with_votes) {
    PartitionResult result;
    for (const auto& [item, votes] : items_with_votes) {
        AgreementClass cls = classify_agreement(votes, item.correct_label);
        McqItem tagged = item;
        tagged.agreement_class = cls;
        result.groups[cls].push_back(std::move(tagged));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Vote log
// ---------------------------------------------------------------------------

std::string vote_to_json_line(const Vote& vote) {
    json record;
    record["item_id"] = vote.item_id;
    record["model_id"] = vote.model_id;
    record["sample_index"] = vote.sample_index;
    record["choice"] = vote.choice ? std::string(1, *vote.choice) : "UNANSWERABLE";
    record["unextracted"] = vote.unextracted;
    return record.dump();
}

Vote vote_from_json_line(const std::string& line) {
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object())
        throw Error("SchemaViolation", "bad vote record: " + line);
    Vote vote;
    vote.item_id = record.at("item_id").get<std::string>();
    vote.model_id = record.at("model_id").get<std::string>();
    vote.sample_index = record.at("sample_index").get<int>();
    std::string choice = record.at("choice").get<std::string>();
    if (choice != "UNANSWERABLE") {
        if (choice.size() != 1) throw Error("SchemaViolation", "bad vote choice: " + choice);
        vote.choice = choice[0];
    }
    vote.unextracted = record.value("unextracted", false);
    return vote;
}

void save_votes(const std::filesystem::path& path, std::span<const Vote> votes) {
    std::string out;
    for (const auto& vote : votes) {
        out += vote_to_json_line(vote);
        out += '\n';
    }
    atomic_write_file(path, out);
}

std::vector<Vote> load_votes(const std::filesystem::path& path) {
    std::vector<Vote> votes;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        votes.push_back(vote_from_json_line(line));
    }
    return votes;
}

}  // namespace sciq
