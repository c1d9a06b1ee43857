#include "sciq/eval.hpp"

#include "sciq/reward.hpp"
#include "sciq/store.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace sciq;

namespace {

const std::set<char> kLabels10 = {'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J'};

EvalRecord make_record(const std::string& domain, bool extracted, bool correct, int run = 0) {
    EvalRecord r;
    r.item_id = "x";
    r.domain = domain;
    if (extracted) r.extracted_label = 'A';
    r.correct = correct;
    r.run_index = run;
    return r;
}

}  // namespace

TEST_CASE("extract_answer: cascade tier examples") {
    CHECK(extract_answer("Therefore the answer is (D).", kLabels10) == 'D');
    CHECK(extract_answer("I hesitate between B and C. Final answer: C", kLabels10) == 'C');
    CHECK(extract_answer("The result is 42.", kLabels10) == std::nullopt);
    // tier 2
    CHECK(extract_answer("The only consistent choice is (G).", kLabels10) == 'G');
    CHECK(extract_answer("\\boxed{E}", kLabels10) == 'E');
    // tier 3
    CHECK(extract_answer("Thinking through the cases.\nB", kLabels10) == 'B');
    // out-of-range labels are ignored
    CHECK(extract_answer("Answer: Z", kLabels10) == std::nullopt);
    CHECK(extract_answer("Answer: E", {'A', 'B'}) == std::nullopt);
    CHECK_THROWS_AS(extract_answer("anything", {}), Error);
}

TEST_CASE("extract_answer: tiers never mix and last-in-tier wins") {
    // Tier 1 beats a later tier-2 parenthesized letter.
    CHECK(extract_answer("The answer is B. Also consider (D).", kLabels10) == 'B');
    // Within tier 1, the last occurrence wins.
    CHECK(extract_answer("answer: A ... later ... answer: C", kLabels10) == 'C');
}

TEST_CASE("extraction fixture: 60 labeled responses, 100% agreement, rate 50/60") {
    auto lines = split_lines(read_file(test::asset_dir() / "fixtures" /
                                       "extraction_fixture.jsonl"));
    std::size_t total = 0;
    std::size_t extracted = 0;
    for (const auto& line : lines) {
        if (trim(line).empty()) continue;
        auto record = nlohmann::json::parse(line);
        ++total;
        auto got = extract_answer(record["response"].get<std::string>(), kLabels10);
        if (record["label"].is_null()) {
            CHECK_MESSAGE(!got.has_value(), record["id"].get<std::string>());
        } else {
            REQUIRE_MESSAGE(got.has_value(), record["id"].get<std::string>());
            CHECK_MESSAGE(*got == record["label"].get<std::string>()[0],
                          record["id"].get<std::string>());
            ++extracted;
        }
    }
    CHECK(total == 60);
    CHECK(extracted == 50);
}

TEST_CASE("augment_permutations: 4 variants, correct text in each position") {
    auto item = test::make_item("a1", 4, 'C');
    auto variants = augment_permutations(item);
    REQUIRE(variants.size() == 4);

    std::set<char> positions;
    for (const auto& v : variants) {
        positions.insert(v.correct_label);
        CHECK(v.correct_text() == item.correct_text());
        auto sorted_a = v.options;
        auto sorted_b = item.options;
        std::sort(sorted_a.begin(), sorted_a.end());
        std::sort(sorted_b.begin(), sorted_b.end());
        CHECK(sorted_a == sorted_b);
    }
    CHECK(positions == std::set<char>{'A', 'B', 'C', 'D'});

    // Distractors keep their cyclic order in every variant.
    for (const auto& v : variants) {
        std::vector<std::string> cycle;
        std::size_t start = v.correct_index();
        for (std::size_t i = 1; i < 4; ++i) cycle.push_back(v.options[(start + i) % 4]);
        std::vector<std::string> base;
        for (std::size_t i = 1; i < 4; ++i)
            base.push_back(item.options[(item.correct_index() + i) % 4]);
        CHECK(cycle == base);
    }
}

TEST_CASE("a prediction naming each variant's correct label earns full reward") {
    auto item = test::make_item("a4", 4, 'B');
    for (const auto& variant : augment_permutations(item)) {
        auto episode = reward_episode(variant, "Answer: " + std::string(1, variant.correct_label));
        CHECK(episode.reward == 1.0);
        CHECK(episode.extracted);
    }
}

TEST_CASE("augment_permutations: correct-at-A item maps to itself in variant 1") {
    auto item = test::make_item("a2", 4, 'A');
    auto variants = augment_permutations(item);
    CHECK(variants[0].options == item.options);
    CHECK(variants[0].correct_label == 'A');
    CHECK(variants[0].question == item.question);
}

TEST_CASE("augment_permutations rejects non-4-option items") {
    CHECK_THROWS_WITH_AS(augment_permutations(test::make_item("a3", 10)),
                         doctest::Contains("WrongOptionCount"), Error);
}

TEST_CASE("score: counting semantics") {
    std::vector<EvalRecord> records;
    for (int i = 0; i < 6; ++i) records.push_back(make_record("d", true, true));
    for (int i = 0; i < 3; ++i) records.push_back(make_record("d", true, false));
    records.push_back(make_record("d", false, false));
    auto m = score(records);
    CHECK(m.n == 10);
    CHECK(m.extraction_rate == doctest::Approx(0.9));
    CHECK(m.accuracy == doctest::Approx(0.6));

    std::vector<EvalRecord> none = {make_record("d", false, false),
                                    make_record("d", false, false)};
    auto z = score(none);
    CHECK(z.accuracy == 0.0);
    CHECK(z.extraction_rate == 0.0);

    CHECK_THROWS_WITH_AS(score(std::vector<EvalRecord>{}), doctest::Contains("EmptyRecords"),
                         Error);
}

TEST_CASE("accuracy never exceeds extraction rate on random record sets") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EvalRecord> records;
        std::size_t n = 1 + bounded_uniform(rng, 50);
        for (std::size_t i = 0; i < n; ++i) {
            bool extracted = bounded_uniform(rng, 2) == 1;
            bool correct = extracted && bounded_uniform(rng, 2) == 1;  // unextracted => wrong
            records.push_back(make_record("d", extracted, correct));
        }
        auto m = score(records);
        CHECK(m.accuracy <= m.extraction_rate);
        CHECK(m.accuracy >= 0.0);
        CHECK(m.extraction_rate <= 1.0);
    }
}

TEST_CASE("per_domain_report: overall equals the record-weighted mean") {
    std::vector<EvalRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(make_record("alpha", true, i < 5));
    for (int i = 0; i < 10; ++i) records.push_back(make_record("beta", true, i < 7));
    auto report = per_domain_report(records);
    REQUIRE(report.domains.size() == 2);
    CHECK(report.domains[0].second.accuracy == doctest::Approx(0.5));
    CHECK(report.domains[1].second.accuracy == doctest::Approx(0.7));
    CHECK(report.overall.accuracy == doctest::Approx(0.6));

    auto single = per_domain_report(std::vector<EvalRecord>{make_record("only", true, true)});
    CHECK(single.overall.accuracy == single.domains[0].second.accuracy);
}

TEST_CASE("per_domain weighted-mean identity on random inputs") {
    std::mt19937_64 rng(8);
    std::vector<EvalRecord> records;
    const char* domains[] = {"a", "b", "c"};
    for (int i = 0; i < 300; ++i) {
        bool extracted = bounded_uniform(rng, 3) > 0;
        records.push_back(make_record(domains[bounded_uniform(rng, 3)], extracted,
                                      extracted && bounded_uniform(rng, 2) == 1));
    }
    auto report = per_domain_report(records);
    double weighted = 0.0;
    for (const auto& [domain, metrics] : report.domains)
        weighted += metrics.accuracy * static_cast<double>(metrics.n);
    weighted /= static_cast<double>(report.overall.n);
    CHECK(report.overall.accuracy == doctest::Approx(weighted));
}

TEST_CASE("run_stats: population standard deviation") {
    std::vector<double> flat = {0.30, 0.30, 0.30};
    auto a = run_stats(flat);
    CHECK(a.mean == doctest::Approx(0.30));
    CHECK(a.sd == doctest::Approx(0.0));

    std::vector<double> two = {0.2, 0.4};
    auto b = run_stats(two);
    CHECK(b.mean == doctest::Approx(0.3));
    CHECK(b.sd == doctest::Approx(0.1));  // population formula, hand-checked

    std::vector<double> one = {0.5};
    auto c = run_stats(one);
    CHECK(c.mean == doctest::Approx(0.5));
    CHECK(c.sd == doctest::Approx(0.0));

    CHECK_THROWS_AS(run_stats(std::vector<double>{}), Error);
}

namespace {

std::vector<McqItem> aligned_pool(const std::vector<std::string>& disciplines,
                                  std::size_t per_discipline) {
    std::vector<McqItem> pool;
    for (const auto& d : disciplines) {
        for (std::size_t i = 0; i < per_discipline; ++i) {
            auto item = test::make_item(d + "-" + std::to_string(i), 10, 'A', d);
            item.agreement_class = AgreementClass::AllAligned;
            pool.push_back(std::move(item));
        }
    }
    return pool;
}

}  // namespace

TEST_CASE("build_validation_set draws per_discipline from each discipline") {
    std::vector<std::string> disciplines = {"Biology", "Physics", "Chemistry"};
    auto pool = aligned_pool(disciplines, 5);
    auto selected = build_validation_set(pool, disciplines, 2, 123);
    CHECK(selected.size() == 6);
    std::map<std::string, int> per;
    for (const auto& item : selected) ++per[item.discipline];
    for (const auto& d : disciplines) CHECK(per[d] == 2);

    // fixed seed reproduces the same ids
    auto again = build_validation_set(pool, disciplines, 2, 123);
    for (std::size_t i = 0; i < selected.size(); ++i)
        CHECK(selected[i].item_id == again[i].item_id);
}

TEST_CASE("build_validation_set: shortfall is an error") {
    std::vector<std::string> disciplines = {"Biology", "Physics"};
    auto pool = aligned_pool({"Biology"}, 5);  // Physics missing entirely
    CHECK_THROWS_WITH_AS(build_validation_set(pool, disciplines, 2, 1),
                         doctest::Contains("InsufficientItems"), Error);

    auto thin = aligned_pool(disciplines, 1);
    CHECK_THROWS_AS(build_validation_set(thin, disciplines, 2, 1), Error);
}

TEST_CASE("build_validation_set enforces the All-Aligned 10-option precondition") {
    auto pool = aligned_pool({"Biology"}, 3);
    pool[0].agreement_class = AgreementClass::MajorityAligned;
    CHECK_THROWS_AS(build_validation_set(pool, {"Biology"}, 1, 1), Error);
}

TEST_CASE("validation ids feed export_split disjointness") {
    std::vector<std::string> disciplines = {"Biology", "Physics"};
    auto pool = aligned_pool(disciplines, 6);
    auto selected = build_validation_set(pool, disciplines, 3, 9);
    std::set<std::string> holdout;
    for (const auto& item : selected) holdout.insert(item.item_id);

    auto exported = store::export_split(pool, {AgreementClass::AllAligned}, holdout);
    CHECK(exported.size() == pool.size() - selected.size());
    for (const auto& item : exported) CHECK(holdout.count(item.item_id) == 0);
}

TEST_CASE("benchmark records round trip") {
    auto dir = test::fresh_tmp_dir("bench");
    auto items = load_benchmark(test::asset_dir() / "fixtures" / "benchmark.jsonl");
    REQUIRE(items.size() == 4);
    CHECK(items[0].answer == 'C');
    CHECK(items[0].domain == "chemistry");
    CHECK(items[0].options.size() == 4);

    save_benchmark(dir / "b.jsonl", items);
    auto reloaded = load_benchmark(dir / "b.jsonl");
    REQUIRE(reloaded.size() == items.size());
    CHECK(reloaded[2].question == items[2].question);
    CHECK(reloaded[2].answer == items[2].answer);
    std::filesystem::remove_all(dir);
}
