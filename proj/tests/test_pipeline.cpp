#include "sciq/pipeline.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

using namespace sciq;

namespace {

PipelineConfig fixture_config() {
    return PipelineConfig::load(test::asset_dir() / "fixtures" / "config.json");
}

}  // namespace

TEST_CASE("config file loads with paper-stated defaults and resolved paths") {
    auto config = fixture_config();
    CHECK(config.backend_kind == "mock");
    CHECK(config.questions_per_paper == 3);
    CHECK(config.dedup_ngram == 13);
    CHECK(config.votes_per_model == 4);
    CHECK(config.voter.temperature == doctest::Approx(0.8));
    CHECK(config.evaluator.temperature == doctest::Approx(0.0));
    CHECK(config.voter_ensemble.size() == 2);
    CHECK(std::filesystem::path(config.mock_script).is_absolute());
    CHECK(std::filesystem::exists(config.mock_script));

    // Fingerprint tracks effective values.
    auto tweaked = config;
    tweaked.seed = config.seed + 1;
    CHECK(tweaked.fingerprint() != config.fingerprint());
    CHECK(fixture_config().fingerprint() == config.fingerprint());
}

TEST_CASE("stage dependencies are enforced") {
    auto dir = test::fresh_tmp_dir("deps");
    auto ctx = make_context(fixture_config(), dir / "run");
    CHECK_THROWS_WITH_AS(run_vote(ctx), doctest::Contains("MissingDependency"), Error);
    CHECK_THROWS_WITH_AS(run_partition(ctx), doctest::Contains("MissingDependency"), Error);
    CHECK_THROWS_WITH_AS(run_export(ctx, {AgreementClass::AllAligned}),
                         doctest::Contains("MissingDependency"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("full mock pipeline: counts, classes, resumability") {
    auto dir = test::fresh_tmp_dir("pipe");
    auto ctx = make_context(fixture_config(), dir / "run");
    auto results = run_full_pipeline(ctx, {});
    REQUIRE(results.size() == 7);
    CHECK(results[0].kept == 3);   // ingested
    CHECK(results[2].kept == 9);   // generated
    CHECK(results[3].kept == 7);   // filtered
    CHECK(results[4].kept == 7);   // refined
    CHECK(results[6].kept == 7);   // partitioned

    auto partitioned = store::read_items(dir / "run" / "partitioned.jsonl");
    std::map<AgreementClass, int> classes;
    for (const auto& item : partitioned) ++classes[*item.agreement_class];
    CHECK(classes[AgreementClass::AllAligned] == 2);
    CHECK(classes[AgreementClass::MajorityAligned] == 2);
    CHECK(classes[AgreementClass::MajorityDivergent] == 1);
    CHECK(classes[AgreementClass::AllDivergent] == 1);
    CHECK(classes[AgreementClass::Discarded] == 1);

    // Refined items all carry 10 options A-J.
    for (const auto& item : store::read_items(dir / "run" / "refined.jsonl")) {
        CHECK(item.options.size() == 10);
        CHECK(item.stage == ItemStage::Refined);
    }

    // A second context over the same run directory resumes as a no-op.
    auto ctx2 = make_context(fixture_config(), dir / "run");
    auto rerun = run_full_pipeline(ctx2, {});
    for (const auto& result : rerun) CHECK(result.skipped);

    // Changing the config invalidates completed stages.
    auto changed = fixture_config();
    changed.seed += 1;
    auto ctx3 = make_context(changed, dir / "run");
    CHECK(!ctx3.manifest.has_stage("ingested"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("export writes only the requested classes") {
    auto dir = test::fresh_tmp_dir("pipeexp");
    auto ctx = make_context(fixture_config(), dir / "run");
    run_full_pipeline(ctx, {});

    auto result = run_export(ctx, {AgreementClass::AllAligned});
    CHECK(result.kept == 2);
    auto exported = store::read_items(dir / "run" / "export_all-aligned.jsonl");
    for (const auto& item : exported)
        CHECK(*item.agreement_class == AgreementClass::AllAligned);

    auto combo = run_export(ctx, {AgreementClass::AllAligned, AgreementClass::MajorityAligned,
                                  AgreementClass::MajorityDivergent});
    CHECK(combo.kept == 5);
    std::filesystem::remove_all(dir);
}

TEST_CASE("config survives a to_json/from_json round trip") {
    auto config = fixture_config();
    auto round = PipelineConfig::from_json(config.to_json());
    CHECK(round.fingerprint() == config.fingerprint());
    CHECK(round.voter_ensemble == config.voter_ensemble);
    CHECK(round.mock_script == config.mock_script);
}

TEST_CASE("parent_run flows from config into the manifest") {
    auto dir = test::fresh_tmp_dir("parent");
    auto config = fixture_config();
    config.parent_run = "fixture-run-0";
    auto ctx = make_context(config, dir / "run");
    run_ingest(ctx, {});
    auto manifest = store::DatasetManifest::load(dir / "run" / "manifest.json");
    REQUIRE(manifest.parent_run.has_value());
    CHECK(*manifest.parent_run == "fixture-run-0");
    CHECK(manifest.run_id == "fixture-run");
    std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate stage writes records, per-domain table and run statistics") {
    auto dir = test::fresh_tmp_dir("pipeeval");
    auto ctx = make_context(fixture_config(), dir / "run");
    auto result = run_evaluate(ctx, test::asset_dir() / "fixtures" / "benchmark.jsonl", 3);
    CHECK(result.kept == 12);  // 4 items x 3 runs

    auto summary = nlohmann::json::parse(read_file(dir / "run" / "eval_summary.json"));
    CHECK(summary["accuracy"]["mean"] == doctest::Approx(0.5));
    CHECK(summary["accuracy"]["sd"] == doctest::Approx(0.0));
    CHECK(summary["extraction_rate"]["mean"] == doctest::Approx(0.75));
    CHECK(summary["runs"].size() == 3);
    CHECK(summary["per_domain"]["chemistry"]["extraction_rate"] == doctest::Approx(1.0));
    CHECK(summary["per_domain"]["physics"]["extraction_rate"] == doctest::Approx(0.5));

    auto table = read_file(dir / "run" / "eval_report.tsv");
    CHECK(table.find("domain\tn\taccuracy\textraction_rate") == 0);
    CHECK(table.find("overall\t12\t0.500000\t0.750000") != std::string::npos);

    auto lines = split_lines(read_file(dir / "run" / "eval_records.jsonl"));
    std::size_t records = 0;
    for (const auto& line : lines)
        if (!trim(line).empty()) ++records;
    CHECK(records == 12);
    CHECK_THROWS_AS(run_evaluate(ctx, test::asset_dir() / "fixtures" / "benchmark.jsonl", 0),
                    Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("analyze stage reports lengths, judge ratings and redundancy") {
    auto dir = test::fresh_tmp_dir("pipeana");
    auto ctx = make_context(fixture_config(), dir / "run");
    run_full_pipeline(ctx, {});
    auto result = run_analyze(ctx);
    CHECK(result.kept == 7);

    auto report = nlohmann::json::parse(read_file(dir / "run" / "analysis_report.json"));
    CHECK(report["items"] == 7);
    CHECK(report["length"]["overall"]["n"] == 7);
    CHECK(report["length"]["overall"]["mean"].get<double>() > 0.0);
    // Fixture judge rules: every item rated "2" / "good and clear" / "4".
    CHECK(report["reasoning_types"]["counts"]["model-or-concept"] == 7);
    CHECK(report["validity"]["counts"]["good-and-clear"] == 7);
    CHECK(report["difficulty"]["histogram"]["4"] == 7);
    CHECK(report["redundancy"]["threshold"] == doctest::Approx(0.9));
    CHECK(std::filesystem::exists(dir / "run" / "length_stats.tsv"));
    CHECK(std::filesystem::exists(dir / "run" / "redundancy_pairs.jsonl"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("unknown backend kind is a config error") {
    auto config = fixture_config();
    config.backend_kind = "telepathy";
    auto dir = test::fresh_tmp_dir("badkind");
    CHECK_THROWS_WITH_AS(make_context(config, dir / "run"), doctest::Contains("ConfigInvalid"),
                         Error);
    std::filesystem::remove_all(dir);
}
