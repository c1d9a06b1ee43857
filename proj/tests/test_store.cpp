#include "sciq/store.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

using namespace sciq;

TEST_CASE("items round-trip field for field") {
    auto dir = test::fresh_tmp_dir("store");
    std::vector<McqItem> items;
    for (int i = 0; i < 3; ++i) {
        auto item = test::make_item("it" + std::to_string(i), 10, 'C');
        item.agreement_class = AgreementClass::MajorityAligned;
        item.lineage.push_back({"generate", "g", ""});
        item.lineage.push_back({"refine", "r", "retry-1"});
        items.push_back(std::move(item));
    }
    CHECK(store::write_items(dir / "items.jsonl", items) == 3);
    auto loaded = store::read_items(dir / "items.jsonl");
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(store::item_to_json(loaded[i]).dump() == store::item_to_json(items[i]).dump());
    CHECK(loaded[0].lineage.size() == 2);
    CHECK(loaded[0].lineage[1].note == "retry-1");
    std::filesystem::remove_all(dir);
}

TEST_CASE("duplicate item_id rejected on write and on read") {
    auto dir = test::fresh_tmp_dir("storedup");
    std::vector<McqItem> dup = {test::make_item("same", 4), test::make_item("same", 4)};
    CHECK_THROWS_WITH_AS(store::write_items(dir / "x.jsonl", dup),
                         doctest::Contains("SchemaViolation"), Error);

    auto line = store::item_to_json(test::make_item("same", 4)).dump();
    atomic_write_file(dir / "dup.jsonl", line + "\n" + line + "\n");
    CHECK_THROWS_WITH_AS(store::read_items(dir / "dup.jsonl"),
                         doctest::Contains("SchemaViolation"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("unknown fields survive a read-rewrite cycle") {
    auto dir = test::fresh_tmp_dir("storefwd");
    auto record = store::item_to_json(test::make_item("fwd", 4));
    record["custom_annotation"] = {{"source", "external"}, {"score", 3}};
    atomic_write_file(dir / "in.jsonl", record.dump() + "\n");

    auto loaded = store::read_items(dir / "in.jsonl");
    REQUIRE(loaded.size() == 1);
    store::write_items(dir / "out.jsonl", loaded);
    auto reread = nlohmann::json::parse(split_lines(read_file(dir / "out.jsonl"))[0]);
    CHECK(reread["custom_annotation"]["source"] == "external");
    CHECK(reread["custom_annotation"]["score"] == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("schema violations: missing fields and bad shapes") {
    CHECK_THROWS_AS(store::item_from_json(nlohmann::json{{"question", "q"}}), Error);
    CHECK_THROWS_AS(
        store::item_from_json(nlohmann::json{
            {"item_id", "x"}, {"question", "q"}, {"options", {{"A", "1"}, {"C", "3"}}},
            {"correct_label", "A"}}),
        Error);  // non-contiguous labels
    CHECK_THROWS_AS(
        store::item_from_json(nlohmann::json{{"item_id", "x"},
                                             {"question", "q"},
                                             {"options", {{"A", "1"}, {"B", "2"}}},
                                             {"correct_label", "AB"}}),
        Error);
}

TEST_CASE("manifest: record, save, load, monotone validation") {
    auto dir = test::fresh_tmp_dir("manifest");
    store::DatasetManifest manifest;
    manifest.run_id = "r1";
    manifest.config_fingerprint = "f";
    manifest.record_stage("ingested", 10);
    manifest.record_stage("sampled", 9);
    manifest.record_stage("generated", 27, nlohmann::json{{"parsed", 30}});
    manifest.record_stage("filtered", 20);
    CHECK_NOTHROW(manifest.validate_monotone());
    manifest.save(dir / "manifest.json");

    auto loaded = store::DatasetManifest::load(dir / "manifest.json");
    CHECK(loaded.run_id == "r1");
    CHECK(loaded.stages.size() == 4);
    CHECK(loaded.find_stage("generated")->detail["parsed"] == 30);

    loaded.record_stage("refined", 25);  // 25 > filtered's 20
    CHECK_THROWS_WITH_AS(loaded.validate_monotone(), doctest::Contains("not monotone"), Error);

    // Paper and item chains are independent: items may exceed paper counts.
    store::DatasetManifest cross;
    cross.record_stage("ingested", 3);
    cross.record_stage("sampled", 3);
    cross.record_stage("generated", 9);
    CHECK_NOTHROW(cross.validate_monotone());
    std::filesystem::remove_all(dir);
}

TEST_CASE("export_split filters by class and honors the holdout") {
    std::vector<McqItem> items;
    auto add = [&](const std::string& id, AgreementClass cls) {
        auto item = test::make_item(id, 10);
        item.agreement_class = cls;
        items.push_back(std::move(item));
    };
    add("aa1", AgreementClass::AllAligned);
    add("aa2", AgreementClass::AllAligned);
    add("ma1", AgreementClass::MajorityAligned);
    add("md1", AgreementClass::MajorityDivergent);
    add("ad1", AgreementClass::AllDivergent);
    add("disc1", AgreementClass::Discarded);

    auto only_aa = store::export_split(items, {AgreementClass::AllAligned}, {});
    CHECK(only_aa.size() == 2);
    for (const auto& item : only_aa) CHECK(*item.agreement_class == AgreementClass::AllAligned);

    auto with_holdout = store::export_split(items, {AgreementClass::AllAligned}, {"aa1"});
    REQUIRE(with_holdout.size() == 1);
    CHECK(with_holdout[0].item_id == "aa2");

    // The combined A.A.+M.A.+M.D. export.
    auto combo = store::export_split(items,
                                     {AgreementClass::AllAligned, AgreementClass::MajorityAligned,
                                      AgreementClass::MajorityDivergent},
                                     {});
    CHECK(combo.size() == 4);

    // Items never classified are not exportable.
    std::vector<McqItem> unclassified = {test::make_item("u", 10)};
    CHECK(store::export_split(unclassified, {AgreementClass::AllAligned}, {}).empty());
}

TEST_CASE("holdout manifest round trip") {
    auto dir = test::fresh_tmp_dir("holdout");
    std::set<std::string> ids = {"a", "b", "c"};
    store::save_holdout(dir / "holdout.json", ids);
    CHECK(store::load_holdout(dir / "holdout.json") == ids);
    std::filesystem::remove_all(dir);
}
