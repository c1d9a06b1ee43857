#include "sciq/item.hpp"

#include "sciq/util.hpp"

#include <set>

namespace sciq {

std::string to_string(ItemStage stage) {
    return stage == ItemStage::Draft ? "draft" : "refined";
}

ItemStage stage_from_string(const std::string& s) {
    if (s == "draft") return ItemStage::Draft;
    if (s == "refined") return ItemStage::Refined;
    throw Error("SchemaViolation", "unknown stage: " + s);
}

std::string to_string(AgreementClass c) {
    switch (c) {
        case AgreementClass::AllAligned: return "all-aligned";
        case AgreementClass::MajorityAligned: return "majority-aligned";
        case AgreementClass::MajorityDivergent: return "majority-divergent";
        case AgreementClass::AllDivergent: return "all-divergent";
        case AgreementClass::Discarded: return "discarded";
    }
    throw Error("InvalidArgument", "bad AgreementClass");
}

AgreementClass agreement_class_from_string(const std::string& s) {
    if (s == "all-aligned") return AgreementClass::AllAligned;
    if (s == "majority-aligned") return AgreementClass::MajorityAligned;
    if (s == "majority-divergent") return AgreementClass::MajorityDivergent;
    if (s == "all-divergent") return AgreementClass::AllDivergent;
    if (s == "discarded") return AgreementClass::Discarded;
    throw Error("SchemaViolation", "unknown agreement class: " + s);
}

std::optional<std::string> validate_item(const McqItem& item) {
    if (item.item_id.empty()) return "missing-item-id";
    if (trim(item.question).empty()) return "empty-question";
    const std::size_t n = item.options.size();
    if (item.stage == ItemStage::Draft && n != 4) return "wrong-option-count";
    if (item.stage == ItemStage::Refined && n != 10) return "wrong-option-count";
    if (item.correct_label < 'A' || static_cast<std::size_t>(item.correct_label - 'A') >= n)
        return "correct-label-out-of-range";
    std::set<std::string> seen;
    for (const auto& text : item.options) {
        if (trim(text).empty()) return "empty-option-text";
        if (!seen.insert(text).second) return "duplicate-option-text";
    }
    return std::nullopt;
}

}  // namespace sciq
