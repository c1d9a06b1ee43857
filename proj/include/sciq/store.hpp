#pragma once
// Canonical dataset persistence: one JSON record per line, a per-run
// manifest, holdout manifests and class-filtered exports. All writes are
// atomic (temp + rename).

#include "sciq/item.hpp"
#include "sciq/util.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace sciq::store {

/// Item schema: item_id, paper_id, discipline, subdomain, question, options
/// (label -> text), correct_label, rationale, stage, agreement_class
/// (optional), lineage. Unknown fields are preserved round-trip.
nlohmann::json item_to_json(const McqItem& item);
McqItem item_from_json(const nlohmann::json& record);

/// Throws Error("SchemaViolation") on a duplicate item_id.
std::size_t write_items(const std::filesystem::path& path, std::span<const McqItem> items);

/// Throws Error("SchemaViolation") on missing required fields or duplicate
/// item_id in the file.
std::vector<McqItem> read_items(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

struct StageEntry {
    std::string stage;  // ingested, sampled, generated, filtered, refined,
                        // voted, partitioned, exported
    std::size_t kept = 0;
    nlohmann::json detail = nlohmann::json::object();  // per-class counts, drops, ...
};

struct DatasetManifest {
    std::string run_id;
    std::string config_fingerprint;
    std::optional<std::string> parent_run;
    std::vector<StageEntry> stages;  // in execution order

    static DatasetManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool has_stage(const std::string& stage) const;
    const StageEntry* find_stage(const std::string& stage) const;
    void record_stage(const std::string& stage, std::size_t kept,
                      nlohmann::json detail = nlohmann::json::object());

    /// Kept counts must not grow along each pipeline chain
    /// (papers: ingested >= sampled; items: generated >= filtered >= refined
    /// >= voted >= partitioned >= exported). Throws on violation.
    void validate_monotone() const;
};

// ---------------------------------------------------------------------------
// Holdout manifest + export
// ---------------------------------------------------------------------------

void save_holdout(const std::filesystem::path& path, const std::set<std::string>& item_ids);
std::set<std::string> load_holdout(const std::filesystem::path& path);

/// Items whose class is in the filter and whose id is not in the holdout.
/// Deterministic: input order preserved.
std::vector<McqItem> export_split(std::span<const McqItem> items,
                                  const std::set<AgreementClass>& class_filter,
                                  const std::set<std::string>& holdout_ids);

}  // namespace sciq::store
