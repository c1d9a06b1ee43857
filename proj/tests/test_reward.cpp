#include "sciq/reward.hpp"

#include "sciq/store.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

using namespace sciq;

TEST_CASE("shuffle preserves the option multiset and tracks the correct text") {
    auto item = test::make_item("s1", 10, 'D');
    auto [shuffled, record] = shuffle_options(item, 42, 3);

    auto sorted_in = item.options;
    auto sorted_out = shuffled.options;
    std::sort(sorted_in.begin(), sorted_in.end());
    std::sort(sorted_out.begin(), sorted_out.end());
    CHECK(sorted_in == sorted_out);
    CHECK(shuffled.correct_text() == item.correct_text());
    CHECK(shuffled.question == item.question);
    CHECK(record.new_correct_label == shuffled.correct_label);
    CHECK(record.item_id == "s1");
    CHECK(record.epoch == 3);

    // permutation is a bijection over the label set
    std::set<char> domain;
    std::set<char> image;
    for (const auto& [from, to] : record.permutation) {
        domain.insert(from);
        image.insert(to);
    }
    CHECK(domain.size() == 10);
    CHECK(image.size() == 10);
    CHECK(record.permutation.at(item.correct_label) == shuffled.correct_label);
    // permutation maps each old label's text to its new home
    for (const auto& [from, to] : record.permutation)
        CHECK(item.options[from - 'A'] == shuffled.options[to - 'A']);
}

TEST_CASE("shuffle is deterministic in (seed, item_id, epoch)") {
    auto item = test::make_item("s2", 10, 'B');
    auto a = shuffle_options(item, 7, 1);
    auto b = shuffle_options(item, 7, 1);
    CHECK(store::item_to_json(a.first).dump() == store::item_to_json(b.first).dump());

    auto c = shuffle_options(item, 7, 2);
    auto d = shuffle_options(item, 8, 1);
    bool epoch_differs = store::item_to_json(c.first).dump() != store::item_to_json(a.first).dump();
    bool seed_differs = store::item_to_json(d.first).dump() != store::item_to_json(a.first).dump();
    CHECK(epoch_differs);
    CHECK(seed_differs);
}

TEST_CASE("an identity draw leaves the item unchanged") {
    auto item = test::make_item("s3", 4, 'C');
    // Scan epochs for the draw where the permutation is the identity; the
    // contract says it must leave everything untouched.
    bool found = false;
    for (std::uint64_t epoch = 0; epoch < 200 && !found; ++epoch) {
        auto [shuffled, record] = shuffle_options(item, 11, epoch);
        bool identity = true;
        for (const auto& [from, to] : record.permutation)
            if (from != to) identity = false;
        if (identity) {
            found = true;
            CHECK(shuffled.options == item.options);
            CHECK(shuffled.correct_label == item.correct_label);
            CHECK(record.new_correct_label == item.correct_label);
        }
    }
    CHECK(found);  // 1/24 chance per epoch; 200 epochs make a miss implausible
}

TEST_CASE("shuffle requires at least 2 options") {
    auto item = test::make_item("s4", 4);
    item.options.resize(1);
    CHECK_THROWS_AS(shuffle_options(item, 1, 1), Error);
}

TEST_CASE("reward_syn matches Eq-style binary semantics") {
    CHECK(reward_syn('B', 'B') == 1.0);
    CHECK(reward_syn('C', 'B') == 0.0);
    CHECK(reward_syn(std::nullopt, 'B') == 0.0);
}

TEST_CASE("reward is invariant under relabeling both sides") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 1000; ++i) {
        char x = static_cast<char>('A' + bounded_uniform(rng, 10));
        char y = static_cast<char>('A' + bounded_uniform(rng, 10));
        // random bijection over A..J
        std::vector<char> to(10);
        for (int k = 0; k < 10; ++k) to[k] = static_cast<char>('A' + k);
        portable_shuffle(to, rng);
        auto p = [&](char c) { return to[c - 'A']; };
        CHECK(reward_syn(x, y) == reward_syn(p(x), p(y)));
    }
}

TEST_CASE("reward_episode composes extraction with the reward") {
    auto item = test::make_item("r1", 10, 'C');
    auto hit = reward_episode(item, "Working it through, the answer is (C).");
    CHECK(hit.reward == 1.0);
    CHECK(hit.extracted);

    auto none = reward_episode(item, "No option seems right to me.");
    CHECK(none.reward == 0.0);
    CHECK(!none.extracted);

    auto wrong = reward_episode(item, "Answer: D");
    CHECK(wrong.reward == 0.0);
    CHECK(wrong.extracted);
}

TEST_CASE("reward follows the correct option text through a shuffle") {
    auto item = test::make_item("r2", 10, 'B');
    for (std::uint64_t epoch = 0; epoch < 20; ++epoch) {
        auto [shuffled, record] = shuffle_options(item, 5, epoch);
        std::string response = "Answer: " + std::string(1, shuffled.correct_label);
        auto episode = reward_episode(shuffled, response);
        CHECK(episode.reward == 1.0);
        // and the shuffled correct label still names the original correct text
        CHECK(shuffled.correct_text() == item.correct_text());
    }
}

TEST_CASE("batch scoring appends reward and extracted to each record") {
    std::ifstream in(test::asset_dir() / "fixtures" / "responses.jsonl");
    REQUIRE(in.good());
    std::ostringstream out;
    CHECK(score_rewards_stream(in, out) == 2);

    auto lines = split_lines(out.str());
    auto first = nlohmann::json::parse(lines[0]);
    CHECK(first["reward"] == 1.0);
    CHECK(first["extracted"] == true);
    CHECK(first["item_id"] == "r1");
    CHECK(first["response"] == "The options map numbers to words. Answer: B");
    auto second = nlohmann::json::parse(lines[1]);
    CHECK(second["reward"] == 0.0);
    CHECK(second["extracted"] == false);
}

TEST_CASE("batch scoring rejects records without a response") {
    std::istringstream in(R"({"item_id": "x", "question": "q", "options": {"A": "1", "B": "2"}, "correct_label": "A"})");
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(score_rewards_stream(in, out), doctest::Contains("SchemaViolation"),
                         Error);
}

TEST_CASE("shuffle_batch shuffles every item") {
    std::vector<McqItem> items = {test::make_item("b1", 10, 'A'), test::make_item("b2", 10, 'J')};
    auto out = shuffle_batch(items, 3, 1);
    REQUIRE(out.size() == 2);
    CHECK(out[0].second.item_id == "b1");
    CHECK(out[1].first.correct_text() == items[1].correct_text());
}
