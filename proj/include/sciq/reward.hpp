#pragma once
// Verifiable reward kernel for RLVR trainers: per-epoch option shuffling and
// binary synthetic-label matching. Trainer-agnostic; policy optimization is
// the consumer's job.

#include "sciq/item.hpp"
#include "sciq/util.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sciq {

struct ShuffleRecord {
    std::string item_id;
    std::uint64_t epoch = 0;
    std::map<char, char> permutation;  // old label -> new label, a bijection
    char new_correct_label = 'A';
};

/// Permute the option texts uniformly at random, deterministic in
/// (seed, item_id, epoch): a keyed hash of the triple seeds a mt19937_64
/// driving a Fisher-Yates pass. Labels stay A.., the correct option's text
/// is unchanged and correct_label is updated to follow it. Item must have
/// >= 2 options.
std::pair<McqItem, ShuffleRecord> shuffle_options(const McqItem& item, std::uint64_t seed,
                                                  std::uint64_t epoch);

std::vector<std::pair<McqItem, ShuffleRecord>> shuffle_batch(std::span<const McqItem> items,
                                                             std::uint64_t seed,
                                                             std::uint64_t epoch);

/// The reward: 1.0 iff the prediction matches the synthetic label, else 0.0.
/// A missing prediction (no extractable answer) earns 0.0.
double reward_syn(std::optional<char> predicted_label, char y_syn);

struct EpisodeScore {
    double reward = 0.0;
    bool extracted = false;
};

/// Extract the final option from the response over the item's label set,
/// then apply reward_syn against the item's synthetic label.
EpisodeScore reward_episode(const McqItem& item, const std::string& response_text);

/// Batch scoring file interface: line-delimited JSON records in (item schema
/// plus a "response" field), records out with "reward" and "extracted"
/// appended. Returns the number of records scored.
std::size_t score_rewards_stream(std::istream& in, std::ostream& out);

}  // namespace sciq
