#include <atomic>

#include "doctest.h"
#include "proxyforge/gateway.hpp"
#include "support/fixtures.hpp"

using namespace proxyforge;
using proxyforge::testing::simple_request;

namespace {

GatewayOptions fast_options() {
    GatewayOptions options;
    options.backoff_base_ms = 1;
    options.sleep_fn = [](std::chrono::milliseconds) {};
    return options;
}

}  // namespace

TEST_CASE("mock backend serves scripted choices") {
    MockScript script;
    script.add_choices(simple_request("m", "hello", 2), {"A", "B"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    const auto response = gateway.complete(simple_request("m", "hello", 2));
    CHECK(response.choices == std::vector<std::string>{"A", "B"});
    CHECK(response.backend_tag == "mock");
}

TEST_CASE("scripted queues are consumed in order and then exhaust") {
    MockScript script;
    script.add_choices(simple_request("m", "q"), {"x"});
    script.add_choices(simple_request("m", "q"), {"y"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    CHECK(gateway.complete(simple_request("m", "q")).choices.front() == "x");
    CHECK(gateway.complete(simple_request("m", "q")).choices.front() == "y");
    try {
        gateway.complete(simple_request("m", "q"));
        FAIL("expected ExhaustedScript");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::ExhaustedScript);
    }
}

TEST_CASE("unscripted fingerprints are malformed responses") {
    Gateway gateway(std::make_shared<MockBackend>(MockScript{}), fast_options());
    try {
        gateway.complete(simple_request("m", "never scripted"));
        FAIL("expected MalformedResponse");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::MalformedResponse);
    }
}

TEST_CASE("two timeouts then success records three attempts") {
    MockScript script;
    script.add_error(simple_request("m", "flaky"), "timeout");
    script.add_error(simple_request("m", "flaky"), "timeout");
    script.add_choices(simple_request("m", "flaky"), {"ok"});
    GatewayOptions options = fast_options();
    options.retry_cap = 3;
    int sleeps = 0;
    options.sleep_fn = [&](std::chrono::milliseconds) { ++sleeps; };
    Gateway gateway(std::make_shared<MockBackend>(script), options);
    const auto response = gateway.complete(simple_request("m", "flaky"));
    CHECK(response.choices.front() == "ok");
    CHECK(response.attempts == 3);
    CHECK(sleeps == 2);
}

TEST_CASE("retry cap exhausts into ExhaustedRetries") {
    MockScript script;
    for (int i = 0; i < 3; ++i) script.add_error(simple_request("m", "down"), "http_500");
    GatewayOptions options = fast_options();
    options.retry_cap = 3;
    Gateway gateway(std::make_shared<MockBackend>(script), options);
    try {
        gateway.complete(simple_request("m", "down"));
        FAIL("expected ExhaustedRetries");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::ExhaustedRetries);
    }
}

TEST_CASE("auth failures surface immediately without retry") {
    MockScript script;
    script.add_error(simple_request("m", "secret"), "http_401");
    script.add_choices(simple_request("m", "secret"), {"never reached"});
    GatewayOptions options = fast_options();
    options.retry_cap = 5;
    auto backend = std::make_shared<MockBackend>(script);
    Gateway gateway(backend, options);
    try {
        gateway.complete(simple_request("m", "secret"));
        FAIL("expected AuthError");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::Auth);
    }
    CHECK(backend->calls() == 1);
}

TEST_CASE("a backend returning the wrong choice count is malformed") {
    MockScript script;
    script.add_choices(simple_request("m", "q", 2), {"only one"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    try {
        gateway.complete(simple_request("m", "q", 2));
        FAIL("expected MalformedResponse");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::MalformedResponse);
    }
}

TEST_CASE("request validation rejects malformed requests") {
    Gateway gateway(std::make_shared<MockBackend>(MockScript{}), fast_options());
    ChatRequest no_messages;
    no_messages.model = "m";
    CHECK_THROWS_AS(gateway.complete(no_messages), ProxyError);

    ChatRequest bad_last = simple_request("m", "q");
    bad_last.messages.push_back({"assistant", "a"});
    CHECK_THROWS_AS(gateway.complete(bad_last), ProxyError);

    ChatRequest bad_n = simple_request("m", "q");
    bad_n.n = 0;
    CHECK_THROWS_AS(gateway.complete(bad_n), ProxyError);
}

TEST_CASE("complete_many preserves input order") {
    MockScript script;
    std::vector<ChatRequest> requests;
    for (int i = 0; i < 100; ++i) {
        auto req = simple_request("m", "q" + std::to_string(i));
        script.add_choices(req, {"r" + std::to_string(i)});
        requests.push_back(req);
    }
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    const auto results = gateway.complete_many(requests, 8);
    REQUIRE(results.size() == 100);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(results[i].ok());
        CHECK(results[i].value().choices.front() == "r" + std::to_string(i));
    }
}

TEST_CASE("per-item failures do not abort the batch") {
    MockScript script;
    std::vector<ChatRequest> requests;
    for (int i = 0; i < 10; ++i) {
        auto req = simple_request("m", "q" + std::to_string(i));
        if (i == 5) {
            script.add_error(req, "http_401");
        } else {
            script.add_choices(req, {"ok" + std::to_string(i)});
        }
        requests.push_back(req);
    }
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    const auto results = gateway.complete_many(requests, 4);
    for (int i = 0; i < 10; ++i) {
        if (i == 5) {
            REQUIRE(!results[i].ok());
            CHECK(results[i].error().kind == ErrorKind::Auth);
        } else {
            REQUIRE(results[i].ok());
            CHECK(results[i].value().choices.front() == "ok" + std::to_string(i));
        }
    }
}

TEST_CASE("replaying a batch against a fresh mock is byte-identical") {
    auto build_script = [] {
        MockScript script;
        for (int i = 0; i < 20; ++i) {
            script.add_choices(simple_request("m", "q" + std::to_string(i)),
                               {"r" + std::to_string(i)});
        }
        return script;
    };
    std::vector<ChatRequest> requests;
    for (int i = 0; i < 20; ++i) {
        auto req = simple_request("m", "q" + std::to_string(i));
        req.request_tag = "tag-" + std::to_string(i);
        requests.push_back(req);
    }
    auto run = [&](MockScript script) {
        Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
        std::string all;
        for (const auto& slot : gateway.complete_many(requests, 8)) {
            REQUIRE(slot.ok());
            all += slot.value().request_tag + "=" + slot.value().choices.front() + ";";
        }
        return all;
    };
    CHECK(run(build_script()) == run(build_script()));
}

TEST_CASE("bounded concurrency holds under an instrumented mock") {
    MockScript script;
    std::vector<ChatRequest> requests;
    for (int i = 0; i < 32; ++i) {
        auto req = simple_request("m", "c" + std::to_string(i));
        script.add_choices(req, {"ok"});
        requests.push_back(req);
    }
    auto backend = std::make_shared<MockBackend>(script);
    backend->set_delay(std::chrono::milliseconds(2));
    Gateway gateway(backend, fast_options());
    const auto results = gateway.complete_many(requests, 5);
    for (const auto& r : results) CHECK(r.ok());
    CHECK(backend->max_in_flight_observed() <= 5);
    CHECK(backend->max_in_flight_observed() >= 1);
}

TEST_CASE("mock scripts survive a save/load round trip") {
    MockScript script;
    script.add_choices(simple_request("m", "q1", 2), {"a", "b"});
    script.add_error(simple_request("m", "q2"), "timeout");
    script.add_choices(simple_request("m", "q2"), {"late"});
    const auto dir = proxyforge::testing::fresh_temp_dir("script");
    const auto path = dir / "script.json";
    script.save(path);
    const MockScript loaded = MockScript::load(path);

    GatewayOptions options = fast_options();
    options.retry_cap = 2;
    Gateway gateway(std::make_shared<MockBackend>(loaded), options);
    CHECK(gateway.complete(simple_request("m", "q1", 2)).choices ==
          std::vector<std::string>{"a", "b"});
    const auto response = gateway.complete(simple_request("m", "q2"));
    CHECK(response.choices.front() == "late");
    CHECK(response.attempts == 2);
}
