#include "sciq/gateway.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>

using namespace sciq;

namespace {

ChatRequest basic_request(const std::string& model = "m", int n = 1) {
    ChatRequest r;
    r.model_id = model;
    r.user_prompt = "hello prompt";
    r.n_samples = n;
    return r;
}

}  // namespace

TEST_CASE("request validation") {
    ChatRequest r = basic_request();
    CHECK_NOTHROW(r.validate());
    r.temperature = 2.5;
    CHECK_THROWS_AS(r.validate(), Error);
    r.temperature = 0.5;
    r.n_samples = 0;
    CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("fingerprint is stable and sensitive to every keyed field") {
    ChatRequest a = basic_request();
    ChatRequest b = basic_request();
    CHECK(a.fingerprint() == b.fingerprint());
    b.sample_epoch = 1;
    CHECK(a.fingerprint() != b.fingerprint());
    b = basic_request();
    b.temperature = 0.1;
    CHECK(a.fingerprint() != b.fingerprint());
    b = basic_request();
    b.user_prompt += "!";
    CHECK(a.fingerprint() != b.fingerprint());
    b = basic_request();
    b.n_samples = 2;
    CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("mock echo contract: n_samples texts") {
    auto mock = std::make_shared<MockBackend>();
    mock->add_reply(".*", "B");
    Gateway gateway;
    gateway.register_backend("m", mock);
    auto response = gateway.complete(basic_request("m", 4));
    CHECK(response.texts == std::vector<std::string>{"B", "B", "B", "B"});
    CHECK(mock->call_count() == 1);
}

TEST_CASE("unconfigured model is BackendUnavailable") {
    Gateway gateway;
    CHECK_THROWS_WITH_AS(gateway.complete(basic_request("ghost")),
                         doctest::Contains("BackendUnavailable"), Error);
}

TEST_CASE("cache: identical request served from cache, counter increments once") {
    auto dir = test::fresh_tmp_dir("cache");
    auto mock = std::make_shared<MockBackend>();
    MockBackend::Rule rule;
    rule.pattern_text = "hello";
    rule.replies = {"first", "second"};
    rule.by_call_order = true;  // without the cache, the second call would differ
    mock->add_rule(rule);

    Gateway gateway;
    gateway.register_backend("m", mock);
    gateway.set_cache(std::make_shared<ResponseCache>(dir));

    auto r1 = gateway.complete(basic_request());
    auto r2 = gateway.complete(basic_request());
    CHECK(mock->call_count() == 1);
    CHECK(r1.texts == r2.texts);
    CHECK(r1.request_fingerprint == r2.request_fingerprint);

    // Bumping the epoch re-draws.
    ChatRequest redraw = basic_request();
    redraw.sample_epoch = 1;
    auto r3 = gateway.complete(redraw);
    CHECK(mock->call_count() == 2);
    CHECK(r3.texts != r1.texts);
    std::filesystem::remove_all(dir);
}

TEST_CASE("transient failures retry; exhaustion is BackendUnavailable") {
    auto mock = std::make_shared<MockBackend>();
    MockBackend::Rule rule;
    rule.pattern_text = "hello";
    rule.replies = {"ok"};
    rule.fail_first = 2;
    mock->add_rule(rule);

    Gateway gateway;
    gateway.register_backend("m", mock);
    gateway.set_retry_policy({5, std::chrono::milliseconds(1), 0.0});

    auto response = gateway.complete(basic_request());
    CHECK(response.texts[0] == "ok");

    auto flaky = std::make_shared<MockBackend>();
    MockBackend::Rule dead;
    dead.pattern_text = "hello";
    dead.fail_always = true;
    flaky->add_rule(dead);
    Gateway g2;
    g2.register_backend("m", flaky);
    g2.set_retry_policy({3, std::chrono::milliseconds(1), 0.0});
    CHECK_THROWS_WITH_AS(g2.complete(basic_request()),
                         doctest::Contains("BackendUnavailable"), Error);
    CHECK(flaky->call_count() == 3);
}

TEST_CASE("malformed replies are never retried") {
    auto mock = std::make_shared<MockBackend>();  // no rules, no default reply
    Gateway gateway;
    gateway.register_backend("m", mock);
    gateway.set_retry_policy({5, std::chrono::milliseconds(1), 0.0});
    CHECK_THROWS_WITH_AS(gateway.complete(basic_request()),
                         doctest::Contains("MalformedBackendReply"), Error);
    CHECK(mock->call_count() == 1);
}

TEST_CASE("complete_batch: positional alignment and bounded concurrency") {
    auto mock = std::make_shared<MockBackend>();
    mock->set_default_reply("pong");
    mock->set_latency(std::chrono::milliseconds(5));
    Gateway gateway;
    gateway.register_backend("m", mock);

    std::vector<ChatRequest> requests;
    for (int i = 0; i < 10; ++i) {
        auto r = basic_request();
        r.user_prompt = "req " + std::to_string(i);
        requests.push_back(r);
    }
    auto outcomes = gateway.complete_batch(requests, 3);
    REQUIRE(outcomes.size() == 10);
    for (const auto& o : outcomes) CHECK(o.ok());
    CHECK(mock->peak_concurrency() <= 3);
    CHECK(mock->call_count() == 10);

    CHECK(gateway.complete_batch(std::vector<ChatRequest>{}, 3).empty());
    CHECK_THROWS_AS(gateway.complete_batch(requests, 0), Error);
}

TEST_CASE("complete_batch embeds per-item failures in position") {
    auto mock = std::make_shared<MockBackend>();
    MockBackend::Rule poison;
    poison.pattern_text = "req 4";
    poison.fail_always = true;
    poison.fail_code = "Transport";
    mock->add_rule(poison);
    mock->set_default_reply("fine");

    Gateway gateway;
    gateway.register_backend("m", mock);
    gateway.set_retry_policy({1, std::chrono::milliseconds(1), 0.0});

    std::vector<ChatRequest> requests;
    for (int i = 0; i < 10; ++i) {
        auto r = basic_request();
        r.user_prompt = "req " + std::to_string(i);
        requests.push_back(r);
    }
    auto outcomes = gateway.complete_batch(requests, 4);
    int failures = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) {
            ++failures;
            CHECK(i == 4);
            CHECK(outcomes[i].error_code == "BackendUnavailable");
        }
    }
    CHECK(failures == 1);
}

TEST_CASE("temperature 0 repeated calls are byte-identical without cache") {
    auto mock = std::make_shared<MockBackend>();
    mock->add_reply("hello", "stable text");
    Gateway gateway;
    gateway.register_backend("m", mock);
    ChatRequest r = basic_request();
    r.temperature = 0.0;
    CHECK(gateway.complete(r).texts == gateway.complete(r).texts);
    CHECK(mock->call_count() == 2);  // no cache involved
}

TEST_CASE("retry delays with jitter still converge on success") {
    auto mock = std::make_shared<MockBackend>();
    MockBackend::Rule rule;
    rule.pattern_text = "hello";
    rule.replies = {"ok"};
    rule.fail_first = 3;
    mock->add_rule(rule);

    Gateway gateway;
    gateway.register_backend("m", mock);
    gateway.set_retry_policy({5, std::chrono::milliseconds(1), 0.5});
    CHECK(gateway.complete(basic_request()).texts[0] == "ok");
    CHECK(mock->call_count() == 4);
}

TEST_CASE("mock rules can be restricted to a model id") {
    auto mock = std::make_shared<MockBackend>();
    MockBackend::Rule only_m2;
    only_m2.model_id = "m2";
    only_m2.pattern_text = "hello";
    only_m2.replies = {"from-m2"};
    mock->add_rule(only_m2);
    mock->set_default_reply("generic");

    Gateway gateway;
    gateway.register_backend("m1", mock);
    gateway.register_backend("m2", mock);
    CHECK(gateway.complete(basic_request("m1")).texts[0] == "generic");
    CHECK(gateway.complete(basic_request("m2")).texts[0] == "from-m2");
}

TEST_CASE("mock script file round trip") {
    auto dir = test::fresh_tmp_dir("mockscript");
    atomic_write_file(dir / "script.json", R"({
      "default_reply": "dflt",
      "rules": [{"model": "m", "pattern": "ping", "replies": ["a", "b"]}]
    })");
    auto mock = MockBackend::from_script_file(dir / "script.json");
    Gateway gateway;
    gateway.register_backend("m", mock);

    auto r = basic_request();
    r.user_prompt = "ping";
    CHECK(gateway.complete(r).texts[0] == "a");
    r.sample_epoch = 1;
    CHECK(gateway.complete(r).texts[0] == "b");
    r.user_prompt = "other";
    CHECK(gateway.complete(r).texts[0] == "dflt");
    std::filesystem::remove_all(dir);
}
