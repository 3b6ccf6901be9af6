#include <random>
#include <unordered_set>

#include "doctest.h"
#include "proxyforge/errors.hpp"
#include "proxyforge/reward.hpp"
#include "proxyforge/types.hpp"
#include "support/fixtures.hpp"

using namespace proxyforge;

TEST_CASE("meta_question_id is deterministic") {
    CHECK(meta_question_id("History", "Q") == meta_question_id("History", "Q"));
}

TEST_CASE("meta_question_id includes the domain in the preimage") {
    CHECK(meta_question_id("History", "Q") != meta_question_id("Game", "Q"));
}

TEST_CASE("meta_question_id trims the text") {
    CHECK(meta_question_id("History", "  Q  ") == meta_question_id("History", "Q"));
}

TEST_CASE("meta_question_id rejects empty text") {
    CHECK_THROWS_AS(meta_question_id("History", "   "), ProxyError);
}

TEST_CASE("meta_question_id pins the documented preimage") {
    // sha256("History\nQ"); frozen so the on-disk ids never drift.
    CHECK(meta_question_id("History", "Q") ==
          sha256_hex(std::string("History") + "\n" + "Q"));
    CHECK(meta_question_id("History", "Q").size() == 64);
}

TEST_CASE("meta_question_id has no collisions on a 10k corpus") {
    std::unordered_set<std::string> ids;
    const std::vector<std::string> domains = {"History", "Game", "Policy", "Technology"};
    for (int i = 0; i < 2500; ++i) {
        for (const auto& d : domains) {
            ids.insert(meta_question_id(d, "question number " + std::to_string(i)));
        }
    }
    CHECK(ids.size() == 10000);
}

TEST_CASE("validate_proxy_set counts the True share") {
    ProxySet set;
    set.meta_id = "m";
    for (int i = 0; i < 15; ++i) {
        set.pairs.push_back(ProxyPair{"q" + std::to_string(i),
                                      i < 12 ? Verdict::True : Verdict::False, i});
    }
    const auto report = validate_proxy_set(set, 15, 0.5);
    CHECK(report.pass);
    CHECK(!report.too_few_pairs);
    CHECK(report.true_share == doctest::Approx(0.8));
    CHECK(report.majority_ok);
}

TEST_CASE("validate_proxy_set flags too few pairs") {
    ProxySet set;
    set.meta_id = "m";
    for (int i = 0; i < 10; ++i) set.pairs.push_back(ProxyPair{"q", Verdict::True, i});
    const auto report = validate_proxy_set(set, 15, 0.5);
    CHECK(!report.pass);
    CHECK(report.too_few_pairs);
    CHECK(report.majority_ok);
}

TEST_CASE("validate_proxy_set flags a False-heavy set") {
    ProxySet set;
    set.meta_id = "m";
    for (int i = 0; i < 16; ++i) {
        set.pairs.push_back(ProxyPair{"q", i < 5 ? Verdict::True : Verdict::False, i});
    }
    const auto report = validate_proxy_set(set, 15, 0.5);
    CHECK(!report.pass);
    CHECK(!report.too_few_pairs);
    CHECK(!report.majority_ok);
    CHECK(report.true_share == doctest::Approx(0.3125));
}

namespace {

Response random_response(std::mt19937_64& rng, const std::string& meta_id, int idx) {
    Response r;
    r.meta_id = meta_id;
    r.sample_index = idx;
    r.text = "text-" + std::to_string(rng() % 1000);
    r.generator_tag = "gen";
    r.temperature = 0.8;
    return r;
}

}  // namespace

TEST_CASE("records round-trip for every core type") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const MetaQuestion meta =
            make_meta_question("Game", "How do speedruns work, trial " + std::to_string(trial));
        CHECK(meta_question_from_record(to_record(meta)) == meta);

        ProxySet set;
        set.meta_id = meta.id;
        set.flagged = trial % 2 == 0;
        const int l = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < l; ++i) {
            set.pairs.push_back(ProxyPair{"q" + std::to_string(i),
                                          proxyforge::testing::random_verdict(rng, false), i});
        }
        CHECK(proxy_set_from_record(to_record(set)) == set);

        const ProxyPair pair = set.pairs.front();
        CHECK(proxy_pair_from_record(to_record(pair, meta.id)) == pair);

        const Response response = random_response(rng, meta.id, trial);
        CHECK(response_from_record(to_record(response)) == response);

        ScoredResponse scored;
        scored.response = response;
        scored.metric = Metric::Accuracy;
        int correct = 0;
        std::vector<Verdict> references;
        for (int i = 0; i < l; ++i) {
            const Verdict v = proxyforge::testing::random_verdict(rng, true);
            scored.verdicts.push_back(v);
            references.push_back(set.pairs[i].reference);
            if (v == set.pairs[i].reference) ++correct;
        }
        scored.score = static_cast<double>(correct) / l;
        const ScoredResponse reloaded = scored_response_from_record(to_record(scored));
        CHECK(reloaded == scored);
        // stored score must recompute exactly from the record's verdicts
        CHECK(score_accuracy(reloaded.verdicts, references) == reloaded.score);

        PreferencePair pref;
        pref.meta_id = meta.id;
        pref.prompt = meta.text;
        pref.chosen = random_response(rng, meta.id, 0);
        pref.rejected = random_response(rng, meta.id, 1);
        pref.score_chosen = 0.75;
        pref.score_rejected = 0.25;
        pref.iteration = 1 + trial % 2;
        CHECK(preference_pair_from_record(to_record(pref)) == pref);
    }
}

TEST_CASE("meta-question record key order is pinned") {
    const auto record = to_record(make_meta_question("History", "Q"));
    std::vector<std::string> keys;
    for (const auto& [k, v] : record.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"id", "domain", "text"});
}

TEST_CASE("proxy pair record key order is pinned") {
    const auto record = to_record(ProxyPair{"q", Verdict::True, 0}, "m");
    std::vector<std::string> keys;
    for (const auto& [k, v] : record.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"meta_id", "question", "reference", "index"});
}

TEST_CASE("group_proxy_rows rebuilds sets in index order") {
    std::vector<ordered_json> rows;
    rows.push_back(to_record(ProxyPair{"b", Verdict::False, 1}, "m1"));
    rows.push_back(to_record(ProxyPair{"x", Verdict::True, 0}, "m2"));
    rows.push_back(to_record(ProxyPair{"a", Verdict::True, 0}, "m1"));
    const auto sets = group_proxy_rows(rows);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].meta_id == "m1");
    CHECK(sets[0].pairs[0].question == "a");
    CHECK(sets[0].pairs[1].question == "b");
    CHECK(sets[1].meta_id == "m2");
}
