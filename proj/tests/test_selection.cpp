#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "proxyforge/selection.hpp"
#include "support/fixtures.hpp"

using namespace proxyforge;

namespace {

ScoredResponse scored(const std::string& meta_id, int idx, double score) {
    ScoredResponse s;
    s.response.meta_id = meta_id;
    s.response.sample_index = idx;
    s.response.text = "r" + std::to_string(idx);
    s.response.generator_tag = "gen";
    s.response.temperature = 0.8;
    s.score = score;
    s.metric = Metric::Accuracy;
    return s;
}

std::vector<ScoredResponse> scores_for(const std::string& meta_id,
                                       const std::vector<double>& values) {
    std::vector<ScoredResponse> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back(scored(meta_id, static_cast<int>(i), values[i]));
    }
    return out;
}

}  // namespace

TEST_CASE("response_stats computes mean and population variance") {
    const auto stats = response_stats(scores_for("m", {0.2, 0.8}));
    CHECK(stats.mean == doctest::Approx(0.5));
    CHECK(stats.variance == doctest::Approx(0.09));  // ((0.3)^2 + (0.3)^2) / 2
    CHECK(stats.n == 2);
}

TEST_CASE("response_stats handles single and constant score lists") {
    const auto single = response_stats(scores_for("m", {0.7}));
    CHECK(single.mean == doctest::Approx(0.7));
    CHECK(single.variance == 0.0);
    const auto constant = response_stats(scores_for("m", {0.4, 0.4, 0.4}));
    CHECK(constant.variance < 1e-30);  // exact zero up to accumulation dust
}

TEST_CASE("response_stats rejects empty and mixed inputs") {
    CHECK_THROWS_AS(response_stats({}), ProxyError);
    auto mixed = scores_for("a", {0.5});
    mixed.push_back(scored("b", 0, 0.5));
    CHECK_THROWS_AS(response_stats(mixed), ProxyError);
}

TEST_CASE("prioritize sorts by variance with id tie-breaks") {
    std::vector<MetaScoreStats> stats = {
        {"A", 2, 0.5, 0.04}, {"B", 2, 0.5, 0.01}, {"C", 2, 0.5, 0.09}};
    CHECK(prioritize(stats, 2) == std::vector<std::string>{"C", "A"});
    CHECK(prioritize(stats, 0).empty());
    std::vector<MetaScoreStats> tied = {{"B", 2, 0.5, 0.02}, {"A", 2, 0.5, 0.02}};
    CHECK(prioritize(tied, 5) == std::vector<std::string>{"A", "B"});
}

TEST_CASE("build_pair picks extremes and tags the margin") {
    const auto pair = build_pair(scores_for("m", {0.9, 0.3, 0.6}), "prompt", 0.0, 1);
    REQUIRE(pair.has_value());
    CHECK(pair->chosen.sample_index == 0);
    CHECK(pair->rejected.sample_index == 1);
    CHECK(pair->score_chosen == doctest::Approx(0.9));
    CHECK(pair->score_rejected == doctest::Approx(0.3));
    CHECK(pair->prompt == "prompt");
    CHECK(pair->iteration == 1);
}

TEST_CASE("build_pair filters ties and sub-margin gaps") {
    CHECK(!build_pair(scores_for("m", {0.5, 0.5, 0.5}), "p", 0.0, 1).has_value());
    CHECK(!build_pair(scores_for("m", {0.55, 0.5}), "p", 0.1, 1).has_value());
}

TEST_CASE("build_pair needs at least two responses") {
    CHECK_THROWS_AS(build_pair(scores_for("m", {0.5}), "p", 0.0, 1), ProxyError);
}

TEST_CASE("build_pair breaks score ties by lowest sample index") {
    const auto pair = build_pair(scores_for("m", {0.2, 0.8, 0.8, 0.2}), "p", 0.0, 1);
    REQUIRE(pair.has_value());
    CHECK(pair->chosen.sample_index == 1);
    CHECK(pair->rejected.sample_index == 0);
}

TEST_CASE("selection contract holds on random score sets") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        std::vector<double> values;
        for (int i = 0; i < n; ++i) values.push_back((rng() % 101) / 100.0);
        const double margin = (rng() % 30) / 100.0;
        const auto responses = scores_for("m", values);
        const auto pair = build_pair(responses, "p", margin, 1);
        const double best = *std::max_element(values.begin(), values.end());
        const double worst = *std::min_element(values.begin(), values.end());
        if (best > worst + margin) {
            REQUIRE(pair.has_value());
            CHECK(pair->score_chosen == best);
            CHECK(pair->score_rejected == worst);
            CHECK(pair->score_chosen > pair->score_rejected + margin);
        } else {
            CHECK(!pair.has_value());
        }
    }
}

TEST_CASE("prioritize output is a permutation prefix") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 12);
        std::vector<MetaScoreStats> stats;
        std::set<std::string> ids;
        for (int i = 0; i < n; ++i) {
            MetaScoreStats s;
            s.meta_id = "meta-" + std::to_string(rng() % 100);
            if (!ids.insert(s.meta_id).second) continue;
            s.n = 2;
            s.variance = (rng() % 50) / 100.0;
            stats.push_back(s);
        }
        const int budget = static_cast<int>(rng() % (stats.size() + 2));
        const auto ranked = prioritize(stats, budget);
        CHECK(ranked.size() == std::min(stats.size(), static_cast<std::size_t>(budget)));
        std::set<std::string> seen;
        for (const auto& id : ranked) {
            CHECK(ids.count(id) == 1);
            CHECK(seen.insert(id).second);  // no duplicates
        }
        for (std::size_t i = 1; i < ranked.size(); ++i) {
            const auto var = [&](const std::string& id) {
                for (const auto& s : stats) {
                    if (s.meta_id == id) return s.variance;
                }
                return -1.0;
            };
            CHECK(var(ranked[i - 1]) >= var(ranked[i]));
        }
    }
}

TEST_CASE("corpus_stats reports percents with the documented scaling") {
    // Two metas: {0.5, 0.7} and {0.2, 0.8}. Overall mean 0.55 -> 55.00;
    // population variance 0.0525 -> 5.25; per-meta means 0.6 / 0.5.
    std::vector<ScoredResponse> corpus = scores_for("A", {0.5, 0.7});
    for (const auto& s : scores_for("B", {0.2, 0.8})) corpus.push_back(s);
    const auto report = corpus_stats(corpus);
    CHECK(report.mean_pct == doctest::Approx(55.0));
    CHECK(report.variance_pct == doctest::Approx(5.25));
    CHECK(report.largest_mean_pct == doctest::Approx(60.0));
    CHECK(report.lowest_mean_pct == doctest::Approx(50.0));
}

TEST_CASE("corpus_stats degenerate single score") {
    const auto report = corpus_stats(scores_for("A", {0.73}));
    CHECK(report.mean_pct == doctest::Approx(73.0));
    CHECK(report.largest_mean_pct == doctest::Approx(73.0));
    CHECK(report.lowest_mean_pct == doctest::Approx(73.0));
    CHECK(report.variance_pct == 0.0);
}

TEST_CASE("corpus_stats rejects an empty corpus") {
    CHECK_THROWS_AS(corpus_stats({}), ProxyError);
}

TEST_CASE("corpus_stats ordering invariant largest >= overall >= lowest") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ScoredResponse> corpus;
        const int metas = 1 + static_cast<int>(rng() % 6);
        for (int m = 0; m < metas; ++m) {
            const int n = 1 + static_cast<int>(rng() % 5);
            for (int i = 0; i < n; ++i) {
                corpus.push_back(scored("meta-" + std::to_string(m), i, (rng() % 101) / 100.0));
            }
        }
        const auto report = corpus_stats(corpus);
        CHECK(report.largest_mean_pct >= report.mean_pct - 1e-9);
        CHECK(report.mean_pct >= report.lowest_mean_pct - 1e-9);
        CHECK(report.variance_pct >= 0.0);
    }
}
