#pragma once
// Core dataset record: a multiple-choice question with a synthetic correct
// label and stage lineage. Shared by every pipeline stage.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace sciq {

enum class ItemStage { Draft, Refined };

std::string to_string(ItemStage stage);
ItemStage stage_from_string(const std::string& s);

enum class AgreementClass {
    AllAligned,
    MajorityAligned,
    MajorityDivergent,
    AllDivergent,
    Discarded,
};

/// Slug form used in files and CLI flags: "all-aligned", "majority-aligned",
/// "majority-divergent", "all-divergent", "discarded".
std::string to_string(AgreementClass c);
AgreementClass agreement_class_from_string(const std::string& s);

struct LineageEntry {
    std::string stage;     // "generate", "refine", ...
    std::string model_id;  // model that produced this stage
    std::string note;      // optional detail
};

struct McqItem {
    std::string item_id;
    std::string paper_id;
    std::string discipline;
    std::string subdomain;
    std::string question;
    std::vector<std::string> options;  // index 0 is option 'A'; labels are implicit
    char correct_label = 'A';          // the synthetic label the reward kernel targets
    std::string rationale;
    ItemStage stage = ItemStage::Draft;
    std::optional<AgreementClass> agreement_class;
    std::vector<LineageEntry> lineage;
    nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved on rewrite

    char label_at(std::size_t index) const { return static_cast<char>('A' + index); }
    char last_label() const { return static_cast<char>('A' + options.size() - 1); }
    std::size_t correct_index() const { return static_cast<std::size_t>(correct_label - 'A'); }
    const std::string& correct_text() const { return options.at(correct_index()); }

    std::vector<char> label_set() const {
        std::vector<char> labels;
        labels.reserve(options.size());
        for (std::size_t i = 0; i < options.size(); ++i) labels.push_back(label_at(i));
        return labels;
    }
};

/// Check the item invariants: draft => 4 options, refined => 10 options,
/// correct_label within range, option texts non-empty and pairwise distinct,
/// non-empty question. Returns std::nullopt when valid, otherwise a reason
/// code ("wrong-option-count", "duplicate-option-text", ...).
std::optional<std::string> validate_item(const McqItem& item);

}  // namespace sciq
