#include "sciq/reward.hpp"

#include "sciq/eval.hpp"
#include "sciq/store.hpp"

#include <istream>
#include <ostream>
#include <set>

namespace sciq {

std::pair<McqItem, ShuffleRecord> shuffle_options(const McqItem& item, std::uint64_t seed,
                                                  std::uint64_t epoch) {
    const std::size_t n = item.options.size();
    if (n < 2) throw Error("InvalidArgument", "shuffle_options requires >= 2 options");

    auto rng = seeded_rng(derive_seed(seed, item.item_id, epoch));
    // placement[i] = source index of the option that lands at position i.
    std::vector<std::size_t> placement(n);
    for (std::size_t i = 0; i < n; ++i) placement[i] = i;
    portable_shuffle(placement, rng);

    McqItem shuffled = item;
    ShuffleRecord record;
    record.item_id = item.item_id;
    record.epoch = epoch;
    for (std::size_t i = 0; i < n; ++i) {
        shuffled.options[i] = item.options[placement[i]];
        record.permutation[item.label_at(placement[i])] = item.label_at(i);
        if (placement[i] == item.correct_index()) {
            shuffled.correct_label = item.label_at(i);
        }
    }
    record.new_correct_label = shuffled.correct_label;
    return {std::move(shuffled), std::move(record)};
}

std::vector<std::pair<McqItem, ShuffleRecord>> shuffle_batch(std::span<const McqItem> items,
                                                             std::uint64_t seed,
                                                             std::uint64_t epoch) {
    std::vector<std::pair<McqItem, ShuffleRecord>> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(shuffle_options(item, seed, epoch));
    return out;
}

double reward_syn(std::optional<char> predicted_label, char y_syn) {
    return (predicted_label && *predicted_label == y_syn) ? 1.0 : 0.0;
}

EpisodeScore reward_episode(const McqItem& item, const std::string& response_text) {
    auto labels = item.label_set();
    std::set<char> allowed(labels.begin(), labels.end());
    auto predicted = extract_answer(response_text, allowed);
    return {reward_syn(predicted, item.correct_label), predicted.has_value()};
}

std::size_t score_rewards_stream(std::istream& in, std::ostream& out) {
    using nlohmann::json;
    std::size_t scored = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object())
            throw Error("SchemaViolation",
                        "line " + std::to_string(line_no) + " is not a JSON object");
        if (!record.contains("response"))
            throw Error("SchemaViolation",
                        "line " + std::to_string(line_no) + " lacks a response field");
        McqItem item = store::item_from_json(record);
        EpisodeScore episode = reward_episode(item, record["response"].get<std::string>());
        record["reward"] = episode.reward;
        record["extracted"] = episode.extracted;
        out << record.dump() << '\n';
        ++scored;
    }
    return scored;
}

}  // namespace sciq
