#include "sciq/store.hpp"

#include <algorithm>
#include <map>

namespace sciq::store {

using nlohmann::json;

namespace {

const char* kKnownFields[] = {"item_id",   "paper_id",  "discipline", "subdomain",
                              "question",  "options",   "correct_label", "rationale",
                              "stage",     "agreement_class", "lineage"};

bool is_known_field(const std::string& key) {
    return std::find(std::begin(kKnownFields), std::end(kKnownFields), key) !=
           std::end(kKnownFields);
}

}  // namespace

json item_to_json(const McqItem& item) {
    json record = item.extra.is_object() ? item.extra : json::object();
    record["item_id"] = item.item_id;
    record["paper_id"] = item.paper_id;
    record["discipline"] = item.discipline;
    record["subdomain"] = item.subdomain;
    record["question"] = item.question;
    json options = json::object();
    for (std::size_t i = 0; i < item.options.size(); ++i)
        options[std::string(1, item.label_at(i))] = item.options[i];
    record["options"] = options;
    record["correct_label"] = std::string(1, item.correct_label);
    record["rationale"] = item.rationale;
    record["stage"] = to_string(item.stage);
    if (item.agreement_class) record["agreement_class"] = to_string(*item.agreement_class);
    json lineage = json::array();
    for (const auto& entry : item.lineage) {
        json e;
        e["stage"] = entry.stage;
        e["model_id"] = entry.model_id;
        if (!entry.note.empty()) e["note"] = entry.note;
        lineage.push_back(std::move(e));
    }
    record["lineage"] = lineage;
    return record;
}

McqItem item_from_json(const json& record) {
    if (!record.is_object()) throw Error("SchemaViolation", "item record is not an object");
    for (const char* field : {"item_id", "question", "options", "correct_label"}) {
        if (!record.contains(field))
            throw Error("SchemaViolation", std::string("item record lacks ") + field);
    }

    McqItem item;
    item.item_id = record["item_id"].get<std::string>();
    item.paper_id = record.value("paper_id", "");
    item.discipline = record.value("discipline", "");
    item.subdomain = record.value("subdomain", "");
    item.question = record["question"].get<std::string>();

    const json& options = record["options"];
    if (!options.is_object() || options.empty())
        throw Error("SchemaViolation", "options must be a non-empty label->text object");
    // Object keys come back sorted, which is exactly label order; still check
    // contiguity from 'A'.
    std::size_t index = 0;
    for (auto it = options.begin(); it != options.end(); ++it, ++index) {
        const std::string expected(1, static_cast<char>('A' + index));
        if (it.key() != expected)
            throw Error("SchemaViolation", "non-contiguous option labels at " + it.key());
        item.options.push_back(it.value().get<std::string>());
    }

    std::string correct = record["correct_label"].get<std::string>();
    if (correct.size() != 1)
        throw Error("SchemaViolation", "correct_label must be one letter");
    item.correct_label = correct[0];
    item.rationale = record.value("rationale", "");
    item.stage = stage_from_string(record.value("stage", "draft"));
    if (record.contains("agreement_class") && !record["agreement_class"].is_null())
        item.agreement_class =
            agreement_class_from_string(record["agreement_class"].get<std::string>());
    for (const auto& e : record.value("lineage", json::array())) {
        LineageEntry entry;
        entry.stage = e.value("stage", "");
        entry.model_id = e.value("model_id", "");
        entry.note = e.value("note", "");
        item.lineage.push_back(std::move(entry));
    }

    item.extra = json::object();
    for (auto it = record.begin(); it != record.end(); ++it) {
        if (!is_known_field(it.key())) item.extra[it.key()] = it.value();
    }
    return item;
}

std::size_t write_items(const std::filesystem::path& path, std::span<const McqItem> items) {
    std::set<std::string> seen;
    std::string out;
    for (const auto& item : items) {
        if (!seen.insert(item.item_id).second)
            throw Error("SchemaViolation", "duplicate item_id: " + item.item_id);
        out += item_to_json(item).dump();
        out += '\n';
    }
    atomic_write_file(path, out);
    return items.size();
}

std::vector<McqItem> read_items(const std::filesystem::path& path) {
    std::vector<McqItem> items;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw Error("SchemaViolation",
                        path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
        McqItem item = item_from_json(record);
        if (!seen.insert(item.item_id).second)
            throw Error("SchemaViolation", "duplicate item_id in file: " + item.item_id);
        items.push_back(std::move(item));
    }
    return items;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    json record;
    try {
        record = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("SchemaViolation", "bad manifest " + path.string() + ": " + e.what());
    }
    DatasetManifest manifest;
    manifest.run_id = record.value("run_id", "");
    manifest.config_fingerprint = record.value("config_fingerprint", "");
    if (record.contains("parent_run") && !record["parent_run"].is_null())
        manifest.parent_run = record["parent_run"].get<std::string>();
    for (const auto& s : record.value("stages", json::array())) {
        StageEntry entry;
        entry.stage = s.at("stage").get<std::string>();
        entry.kept = s.at("kept").get<std::size_t>();
        entry.detail = s.value("detail", json::object());
        manifest.stages.push_back(std::move(entry));
    }
    return manifest;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
    json record;
    record["run_id"] = run_id;
    record["config_fingerprint"] = config_fingerprint;
    if (parent_run) record["parent_run"] = *parent_run;
    json stages_json = json::array();
    for (const auto& entry : stages) {
        json s;
        s["stage"] = entry.stage;
        s["kept"] = entry.kept;
        s["detail"] = entry.detail;
        stages_json.push_back(std::move(s));
    }
    record["stages"] = stages_json;
    atomic_write_file(path, record.dump(2) + "\n");
}

bool DatasetManifest::has_stage(const std::string& stage) const {
    return find_stage(stage) != nullptr;
}

const StageEntry* DatasetManifest::find_stage(const std::string& stage) const {
    for (const auto& entry : stages) {
        if (entry.stage == stage) return &entry;
    }
    return nullptr;
}

void DatasetManifest::record_stage(const std::string& stage, std::size_t kept, json detail) {
    for (auto& entry : stages) {
        if (entry.stage == stage) {
            entry.kept = kept;
            entry.detail = std::move(detail);
            return;
        }
    }
    stages.push_back({stage, kept, std::move(detail)});
}

void DatasetManifest::validate_monotone() const {
    static const std::vector<std::vector<std::string>> kChains = {
        {"ingested", "sampled"},
        {"generated", "filtered", "refined", "voted", "partitioned", "exported"},
    };
    for (const auto& chain : kChains) {
        const StageEntry* prev = nullptr;
        for (const auto& stage : chain) {
            const StageEntry* cur = find_stage(stage);
            if (!cur) continue;
            if (prev && cur->kept > prev->kept)
                throw Error("SchemaViolation", "stage counts not monotone: " + stage + " kept " +
                                                   std::to_string(cur->kept) + " > " +
                                                   prev->stage + " kept " +
                                                   std::to_string(prev->kept));
            prev = cur;
        }
    }
}

// ---------------------------------------------------------------------------
// Holdout + export
// ---------------------------------------------------------------------------

void save_holdout(const std::filesystem::path& path, const std::set<std::string>& item_ids) {
    json record;
    record["item_ids"] = item_ids;
    atomic_write_file(path, record.dump(2) + "\n");
}

std::set<std::string> load_holdout(const std::filesystem::path& path) {
    json record;
    try {
        record = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("SchemaViolation", "bad holdout manifest: " + std::string(e.what()));
    }
    std::set<std::string> ids;
    for (const auto& id : record.value("item_ids", json::array()))
        ids.insert(id.get<std::string>());
    return ids;
}

std::vector<McqItem> export_split(std::span<const McqItem> items,
                                  const std::set<AgreementClass>& class_filter,
                                  const std::set<std::string>& holdout_ids) {
    std::vector<McqItem> out;
    for (const auto& item : items) {
        if (!item.agreement_class || !class_filter.count(*item.agreement_class)) continue;
        if (holdout_ids.count(item.item_id)) continue;
        out.push_back(item);
    }
    return out;
}

}  // namespace sciq::store
