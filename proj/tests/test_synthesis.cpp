#include <algorithm>
#include "doctest.h"
#include "proxyforge/prompts.hpp"
#include "proxyforge/synthesis.hpp"
#include "support/fixtures.hpp"

using namespace proxyforge;

namespace {

GatewayOptions fast_options() {
    GatewayOptions options;
    options.sleep_fn = [](std::chrono::milliseconds) {};
    return options;
}

}  // namespace

TEST_CASE("parse_enumerated_list reads numbered items") {
    const auto items = parse_enumerated_list("1. Q1\n2. Q2\n3. Q3");
    CHECK(items == std::vector<std::string>{"Q1", "Q2", "Q3"});
}

TEST_CASE("parse_enumerated_list accepts paren and dash markers and strips emphasis") {
    const auto items = parse_enumerated_list("1) **What is DNS?**\n- How do CDNs cache?\nprose\n");
    CHECK(items == std::vector<std::string>{"What is DNS?", "How do CDNs cache?"});
}

TEST_CASE("parse_enumerated_list returns nothing for prose") {
    CHECK(parse_enumerated_list("No list here, only a paragraph of text.").empty());
}

TEST_CASE("parse_proxy_block reads a one-line block") {
    const auto pairs = parse_proxy_block("1. **Question**: X **Answer**: True");
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].question == "X");
    CHECK(pairs[0].reference == Verdict::True);
    CHECK(pairs[0].index == 0);
}

TEST_CASE("parse_proxy_block matches answer labels case-insensitively") {
    const std::string text =
        "1. Question: A\nAnswer: true\n\n"
        "2. Question: B\nAnswer: FALSE\n\n"
        "3. Question: C\nAnswer: not mentioned\n";
    const auto pairs = parse_proxy_block(text);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].reference == Verdict::True);
    CHECK(pairs[1].reference == Verdict::False);
    CHECK(pairs[2].reference == Verdict::NotMentioned);
    CHECK(pairs[2].index == 2);
}

TEST_CASE("parse_proxy_block drops blocks with illegal labels") {
    const std::string text =
        "1. Question: A\nAnswer: maybe\n\n"
        "2. Question: B\nAnswer: True\n";
    const auto pairs = parse_proxy_block(text);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].question == "B");
    CHECK(pairs[0].index == 0);
}

TEST_CASE("parse_proxy_block returns empty on prose") {
    CHECK(parse_proxy_block("Nothing structured here.").empty());
}

TEST_CASE("parse_proxy_block handles the reference output format") {
    // Same shape the proxy-pair prompt demonstrates: numbered bold blocks,
    // question on one line, answer on the next.
    std::string text;
    for (int i = 1; i <= 5; ++i) {
        text += std::to_string(i) + ". **Question**: Statement number " + std::to_string(i) +
                " about sentence embeddings.\n**Answer**: True\n\n";
    }
    const auto pairs = parse_proxy_block(text);
    REQUIRE(pairs.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(pairs[i].reference == Verdict::True);
        CHECK(pairs[i].index == i);
    }
}

TEST_CASE("synthesize_meta_questions collects the target count in listed order") {
    DomainSpec domain{"History", 3};
    SynthOptions options;
    MockScript script;
    script.add_choices(meta_question_request(domain, options), {"1. Q1\n2. Q2\n3. Q3"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    const auto metas = synthesize_meta_questions(domain, gateway, options);
    REQUIRE(metas.size() == 3);
    CHECK(metas[0].text == "Q1");
    CHECK(metas[1].text == "Q2");
    CHECK(metas[2].text == "Q3");
    CHECK(metas[0].domain == "History");
    CHECK(metas[0].id == meta_question_id("History", "Q1"));
}

TEST_CASE("synthesize_meta_questions deduplicates across batches") {
    DomainSpec domain{"Game", 3};
    SynthOptions options;
    MockScript script;
    script.add_choices(meta_question_request(domain, options), {"1. Q1\n2. Q2"});
    script.add_choices(meta_question_request(domain, options), {"1. Q1\n2. Q3"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    const auto metas = synthesize_meta_questions(domain, gateway, options);
    REQUIRE(metas.size() == 3);
    CHECK(metas[0].text == "Q1");
    CHECK(metas[1].text == "Q2");
    CHECK(metas[2].text == "Q3");
}

TEST_CASE("synthesize_meta_questions hits the batch cap") {
    DomainSpec domain{"Policy", 5};
    SynthOptions options;
    options.batch_cap = 2;
    MockScript script;
    script.add_choices(meta_question_request(domain, options), {"1. Q1"});
    script.add_choices(meta_question_request(domain, options), {"1. Q1"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    try {
        synthesize_meta_questions(domain, gateway, options);
        FAIL("expected BatchCapExceeded");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::BatchCapExceeded);
    }
}

TEST_CASE("synthesize_meta_questions raises ParseError on unlistable output") {
    DomainSpec domain{"Policy", 2};
    SynthOptions options;
    MockScript script;
    script.add_choices(meta_question_request(domain, options), {"no items at all"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    try {
        synthesize_meta_questions(domain, gateway, options);
        FAIL("expected ParseError");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
    }
}

namespace {

std::string blocks(int count, int true_count) {
    std::string text;
    for (int i = 0; i < count; ++i) {
        text += std::to_string(i + 1) + ". **Question**: Claim " + std::to_string(i) +
                "\n**Answer**: " + (i < true_count ? "True" : "False") + "\n\n";
    }
    return text;
}

}  // namespace

TEST_CASE("synthesize_proxy_pairs returns a valid set") {
    const MetaQuestion meta = make_meta_question("History", "Describe the silk road in depth");
    SynthOptions options;
    options.min_pairs = 5;
    MockScript script;
    script.add_choices(proxy_pair_request(meta, options), {blocks(5, 5)});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    const ProxySet set = synthesize_proxy_pairs(meta, gateway, options);
    CHECK(set.meta_id == meta.id);
    CHECK(set.size() == 5);
    CHECK(!set.flagged);
    for (const auto& p : set.pairs) CHECK(p.reference == Verdict::True);
}

TEST_CASE("synthesize_proxy_pairs retries then flags the best attempt") {
    const MetaQuestion meta = make_meta_question("Game", "Explain competitive ladders");
    SynthOptions options;
    options.min_pairs = 10;
    options.retry_cap = 3;
    MockScript script;
    script.add_choices(proxy_pair_request(meta, options), {blocks(4, 4)});
    script.add_choices(proxy_pair_request(meta, options), {blocks(7, 7)});
    script.add_choices(proxy_pair_request(meta, options), {blocks(5, 5)});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    const ProxySet set = synthesize_proxy_pairs(meta, gateway, options);
    CHECK(set.flagged);
    CHECK(set.size() == 7);  // largest failing attempt wins
}

TEST_CASE("synthesize_proxy_pairs raises ParseError when nothing parses") {
    const MetaQuestion meta = make_meta_question("Game", "Explain frame data");
    SynthOptions options;
    options.retry_cap = 2;
    MockScript script;
    script.add_choices(proxy_pair_request(meta, options), {"prose"});
    script.add_choices(proxy_pair_request(meta, options), {"more prose"});
    Gateway gateway(std::make_shared<MockBackend>(script), fast_options());
    try {
        synthesize_proxy_pairs(meta, gateway, options);
        FAIL("expected ParseError");
    } catch (const ProxyError& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
    }
}

TEST_CASE("the built-in domain list has 40 entries including the named five") {
    const auto& domains = default_domains();
    CHECK(domains.size() == 40);
    for (const char* name : {"Computer Science", "Technology", "History", "Game", "Policy"}) {
        CHECK(std::find(domains.begin(), domains.end(), name) != domains.end());
    }
}

TEST_CASE("prompt templates substitute their placeholders") {
    const std::string meta_prompt = render_meta_question_prompt("History");
    CHECK(meta_prompt.find("Topic: History") != std::string::npos);
    CHECK(meta_prompt.find("{TOPIC}") == std::string::npos);

    const std::string proxy_prompt = render_proxy_pair_prompt("What is X?");
    CHECK(proxy_prompt.find("Meta-question: What is X?") != std::string::npos);
    CHECK(proxy_prompt.find("{META-QUESTION}") == std::string::npos);

    const std::string judge_prompt = render_judge_prompt("DOC", "Q?");
    CHECK(judge_prompt.find("Document: DOC") != std::string::npos);
    CHECK(judge_prompt.find("Question: Q?") != std::string::npos);
}
