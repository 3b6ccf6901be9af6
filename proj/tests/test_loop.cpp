#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "proxyforge/loop.hpp"
#include "support/fixtures.hpp"

using namespace proxyforge;

namespace {

std::vector<MetaQuestion> toy_dataset(int n) {
    std::vector<MetaQuestion> metas;
    for (int i = 0; i < n; ++i) {
        metas.push_back(make_meta_question("toy", "episode " + std::to_string(i)));
    }
    return metas;
}

LoopConfig toy_loop_config() {
    LoopConfig config;
    config.iterations = 2;
    config.k = 8;
    config.beta = 0.1;
    config.learning_rate = 0.5;
    config.epochs = 5;
    config.batch_size = 2;
    config.grad_accum = 8;
    config.seed = 7;
    return config;
}

}  // namespace

TEST_CASE("partition_dataset splits disjointly and covers everything") {
    const auto metas = toy_dataset(11);
    const auto parts = partition_dataset(metas, 3, "random", {}, 5);
    REQUIRE(parts.size() == 3);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& part : parts) {
        CHECK(!part.empty());
        total += part.size();
        for (const auto& m : part) CHECK(seen.insert(m.id).second);
    }
    CHECK(total == metas.size());
}

TEST_CASE("partition_dataset honors explicit sizes") {
    const auto parts = partition_dataset(toy_dataset(10), 2, "random", {3, 7}, 1);
    CHECK(parts[0].size() == 3);
    CHECK(parts[1].size() == 7);
    CHECK_THROWS_AS(partition_dataset(toy_dataset(10), 2, "random", {3, 6}, 1), ProxyError);
}

TEST_CASE("partition_dataset is seed-deterministic") {
    const auto a = partition_dataset(toy_dataset(9), 3, "random", {}, 42);
    const auto b = partition_dataset(toy_dataset(9), 3, "random", {}, 42);
    const auto c = partition_dataset(toy_dataset(9), 3, "random", {}, 43);
    CHECK(a[0][0].id == b[0][0].id);
    bool any_difference = false;
    for (int w = 0; w < 3; ++w) {
        for (std::size_t i = 0; i < a[w].size(); ++i) {
            if (a[w][i].id != c[w][i].id) any_difference = true;
        }
    }
    CHECK(any_difference);
}

TEST_CASE("domain partitioning spreads domains round-robin") {
    std::vector<MetaQuestion> metas;
    for (int i = 0; i < 4; ++i) {
        metas.push_back(make_meta_question("A", "a" + std::to_string(i)));
        metas.push_back(make_meta_question("B", "b" + std::to_string(i)));
    }
    const auto parts = partition_dataset(metas, 2, "domain", {}, 0);
    for (const auto& part : parts) {
        std::set<std::string> domains;
        for (const auto& m : part) domains.insert(m.domain);
        CHECK(domains == std::set<std::string>{"A", "B"});
    }
}

TEST_CASE("partition rejects undersized datasets") {
    CHECK_THROWS_AS(partition_dataset(toy_dataset(1), 2, "random", {}, 0), ProxyError);
}

TEST_CASE("toy experiment improves the expected score over iterations") {
    const ToyWorld world = ToyWorld::uniform(8);
    const LoopConfig config = toy_loop_config();
    ToyExperimentConfig toy;
    toy.metas_per_iteration = 16;
    toy.init_logit = -1.0;
    const auto result = run_toy_experiment(world, config, toy);
    REQUIRE(result.loop.iterations.size() == 2);
    CHECK(result.loop.has_initial_expected_score);
    const double initial = result.loop.initial_expected_score;
    CHECK(initial == doctest::Approx(1.0 / (1.0 + std::exp(1.0))));
    CHECK(result.loop.iterations[0].expected_score > initial);
    CHECK(result.loop.iterations[1].expected_score >=
          result.loop.iterations[0].expected_score - 1e-9);
    CHECK(result.loop.iterations[0].pairs > 0);
    CHECK(result.loop.total_pairs > 0);
}

TEST_CASE("toy experiment is deterministic for a fixed seed") {
    const ToyWorld world = ToyWorld::uniform(6);
    LoopConfig config = toy_loop_config();
    config.seed = 123;
    ToyExperimentConfig toy;
    toy.metas_per_iteration = 8;
    const auto a = run_toy_experiment(world, config, toy);
    const auto b = run_toy_experiment(world, config, toy);
    REQUIRE(a.loop.iterations.size() == b.loop.iterations.size());
    for (std::size_t i = 0; i < a.loop.iterations.size(); ++i) {
        CHECK(a.loop.iterations[i].expected_score == b.loop.iterations[i].expected_score);
        CHECK(a.loop.iterations[i].pairs == b.loop.iterations[i].pairs);
        CHECK(a.loop.iterations[i].mean_loss == b.loop.iterations[i].mean_loss);
    }
    CHECK((a.final_policy.logits == b.final_policy.logits).all());
}

TEST_CASE("a saturated toy policy yields no pairs and a flat curve") {
    const ToyWorld world = ToyWorld::uniform(5);
    const LoopConfig config = toy_loop_config();
    ToyExperimentConfig toy;
    toy.metas_per_iteration = 8;
    toy.init_logit = 40.0;
    const auto result = run_toy_experiment(world, config, toy);
    for (const auto& iter : result.loop.iterations) {
        CHECK(iter.skipped);
        CHECK(iter.pairs == 0);
        CHECK(std::abs(iter.expected_score - result.loop.initial_expected_score) < 1e-6);
    }
}

TEST_CASE("expected score is non-decreasing at small learning rates") {
    // All-True references, zero margin, lr well inside the stable region:
    // every probe along the run must be monotone for every seed tried.
    const ToyWorld world = ToyWorld::uniform(6);
    LoopConfig config = toy_loop_config();
    config.iterations = 4;
    config.epochs = 1;  // one update block per probe
    config.learning_rate = 0.05;
    ToyExperimentConfig toy;
    toy.metas_per_iteration = 16;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        config.seed = seed;
        const auto result = run_toy_experiment(world, config, toy);
        double previous = result.loop.initial_expected_score;
        for (const auto& iter : result.loop.iterations) {
            CHECK(iter.expected_score >= previous - 1e-12);
            previous = iter.expected_score;
        }
    }
}

TEST_CASE("both metrics drive the toy loop") {
    const ToyWorld world = ToyWorld::uniform(6);
    ToyExperimentConfig toy;
    toy.metas_per_iteration = 8;
    LoopConfig accuracy = toy_loop_config();
    accuracy.metric = Metric::Accuracy;
    LoopConfig precision = toy_loop_config();
    precision.metric = Metric::Precision;
    const auto a = run_toy_experiment(world, accuracy, toy);
    const auto p = run_toy_experiment(world, precision, toy);
    CHECK(a.loop.iterations.size() == 2);
    CHECK(p.loop.iterations.size() == 2);
}

TEST_CASE("gateway loop in export mode writes one pairs file per iteration") {
    // Two metas per iteration, k=2, scripted generator and judge. Proxy set
    // has one question; sample 0 covers it, sample 1 does not.
    const auto dir = proxyforge::testing::fresh_temp_dir("loop_export");
    LoopConfig config;
    config.iterations = 1;
    config.k = 2;
    config.temperature = 0.8;
    config.max_tokens = 64;
    config.seed = 3;
    config.trainer = TrainerMode::ExportOnly;
    config.generator_model = "gen";
    config.judge_model = "judge";
    config.out_dir = dir;

    std::vector<MetaQuestion> metas = {make_meta_question("Game", "Explain ranked matchmaking"),
                                       make_meta_question("Game", "Explain netcode rollback")};
    std::map<std::string, ProxySet> proxies;
    MockScript script;
    for (const auto& meta : metas) {
        ProxySet set;
        set.meta_id = meta.id;
        set.pairs = {ProxyPair{"Is the core mechanism described?", Verdict::True, 0}};
        proxies.emplace(meta.id, set);

        ChatRequest gen;
        gen.model = "gen";
        gen.messages = {{"user", meta.text}};
        gen.temperature = 0.8;
        gen.n = 2;
        gen.max_tokens = 64;
        script.add_choices(gen, {"covers the mechanism for " + meta.id, "off-topic rambling"});

        JudgeOptions judge_options;
        judge_options.model = "judge";
        script.add_choices(
            judge_request("covers the mechanism for " + meta.id,
                          "Is the core mechanism described?", judge_options),
            {"True"});
        script.add_choices(judge_request("off-topic rambling",
                                         "Is the core mechanism described?", judge_options),
                           {"Not mentioned"});
    }
    GatewayOptions gateway_options;
    gateway_options.sleep_fn = [](std::chrono::milliseconds) {};
    Gateway gateway(std::make_shared<MockBackend>(script), gateway_options);

    const LoopReport report = run_gateway_loop(config, metas, proxies, gateway);
    REQUIRE(report.iterations.size() == 1);
    CHECK(report.iterations[0].pairs == 2);
    CHECK(std::filesystem::exists(dir / "pairs_iter_1.jsonl"));
    CHECK(read_jsonl(dir / "pairs_iter_1.jsonl").size() == 2);
    CHECK(!std::filesystem::exists(dir / "pairs_iter_2.jsonl"));
}

TEST_CASE("iterations without pairs are recorded and skipped") {
    int trained = 0;
    LoopHooks hooks;
    hooks.generate = [&](const std::vector<MetaQuestion>& metas, int) {
        std::vector<Expected<std::vector<Response>>> out;
        for (const auto& m : metas) {
            std::vector<Response> responses;
            for (int s = 0; s < 2; ++s) {
                Response r;
                r.meta_id = m.id;
                r.sample_index = s;
                r.text = "same";
                responses.push_back(r);
            }
            out.emplace_back(std::move(responses));
        }
        return out;
    };
    hooks.score = [&](const std::vector<Response>& responses, int) {
        std::vector<Expected<ScoreOutcome>> out;
        for (const auto& r : responses) {
            ScoreOutcome outcome;
            outcome.scored.response = r;
            outcome.scored.verdicts = {Verdict::True};
            outcome.scored.score = 0.5;  // constant scores -> zero margins
            out.emplace_back(std::move(outcome));
        }
        return out;
    };
    hooks.train = [&](const std::vector<PreferencePair>&, int) {
        ++trained;
        return 0.0;
    };
    LoopConfig config;
    config.iterations = 2;
    config.k = 2;
    config.seed = 1;
    const auto report = run_alignment_loop(config, toy_dataset(6), hooks);
    CHECK(trained == 0);
    for (const auto& iter : report.iterations) {
        CHECK(iter.skipped);
        CHECK(iter.pairs == 0);
    }
}
