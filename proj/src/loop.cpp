#include "proxyforge/loop.hpp"

#include <algorithm>
#include <numeric>

#include "proxyforge/dpo.hpp"
#include "proxyforge/exploration.hpp"

namespace proxyforge {

std::string_view to_string(TrainerMode mode) {
    return mode == TrainerMode::ToySimulator ? "toy" : "export";
}

std::optional<TrainerMode> trainer_mode_from_string(std::string_view s) {
    if (s == "toy") return TrainerMode::ToySimulator;
    if (s == "export") return TrainerMode::ExportOnly;
    return std::nullopt;
}

ordered_json to_record(const IterationReport& report) {
    ordered_json j{{"iteration", report.iteration},
                   {"metas", report.metas},
                   {"responses", report.responses},
                   {"excluded_metas", report.excluded_metas},
                   {"pairs", report.pairs},
                   {"skipped", report.skipped},
                   {"scores", to_record(report.scores)},
                   {"mean_loss", report.mean_loss}};
    if (report.has_expected_score) j["expected_score"] = report.expected_score;
    return j;
}

ordered_json to_record(const LoopReport& report) {
    ordered_json iterations = ordered_json::array();
    for (const auto& it : report.iterations) iterations.push_back(to_record(it));
    ordered_json j = ordered_json::object();
    if (report.has_initial_expected_score) {
        j["initial_expected_score"] = report.initial_expected_score;
    }
    j["iterations"] = iterations;
    j["total_pairs"] = report.total_pairs;
    return j;
}

std::vector<std::vector<MetaQuestion>> partition_dataset(std::vector<MetaQuestion> metas,
                                                         int iterations,
                                                         const std::string& strategy,
                                                         const std::vector<int>& sizes,
                                                         std::uint64_t seed) {
    if (iterations < 1) throw ProxyError(ErrorKind::InvalidConfig, "iterations must be >= 1");
    if (static_cast<int>(metas.size()) < iterations) {
        throw ProxyError(ErrorKind::InvalidConfig,
                         "dataset smaller than iteration count; partitions would be empty");
    }
    if (strategy == "random") {
        std::mt19937_64 rng(seed);
        portable_shuffle(metas, rng);
    } else if (strategy == "domain") {
        std::stable_sort(metas.begin(), metas.end(),
                         [](const MetaQuestion& a, const MetaQuestion& b) {
                             return a.domain < b.domain;
                         });
    } else {
        throw ProxyError(ErrorKind::InvalidConfig, "unknown partition strategy: " + strategy);
    }

    std::vector<std::vector<MetaQuestion>> parts(iterations);
    if (!sizes.empty()) {
        if (static_cast<int>(sizes.size()) != iterations) {
            throw ProxyError(ErrorKind::InvalidConfig, "partition size list length != iterations");
        }
        const long total = std::accumulate(sizes.begin(), sizes.end(), 0L);
        if (total != static_cast<long>(metas.size())) {
            throw ProxyError(ErrorKind::InvalidConfig, "partition sizes must cover the dataset");
        }
        std::size_t cursor = 0;
        for (int w = 0; w < iterations; ++w) {
            if (sizes[w] < 1) throw ProxyError(ErrorKind::InvalidConfig, "empty partition");
            for (int i = 0; i < sizes[w]; ++i) parts[w].push_back(metas[cursor++]);
        }
        return parts;
    }
    if (strategy == "domain") {
        // Round-robin deal keeps every domain represented in every part.
        for (std::size_t i = 0; i < metas.size(); ++i) {
            parts[i % iterations].push_back(metas[i]);
        }
        return parts;
    }
    const std::size_t base = metas.size() / iterations;
    std::size_t remainder = metas.size() % iterations;
    std::size_t cursor = 0;
    for (int w = 0; w < iterations; ++w) {
        std::size_t take = base + (remainder > 0 ? 1 : 0);
        if (remainder > 0) --remainder;
        for (std::size_t i = 0; i < take; ++i) parts[w].push_back(metas[cursor++]);
    }
    return parts;
}

LoopReport run_alignment_loop(const LoopConfig& config, const std::vector<MetaQuestion>& dataset,
                              const LoopHooks& hooks) {
    if (config.k < 2) throw ProxyError(ErrorKind::InvalidConfig, "loop requires k >= 2");
    const auto parts = partition_dataset(dataset, config.iterations, config.partition_strategy,
                                         config.partition_sizes, config.seed);
    LoopReport report;
    if (hooks.expected_score) {
        report.initial_expected_score = hooks.expected_score();
        report.has_initial_expected_score = true;
    }

    for (int w = 1; w <= config.iterations; ++w) {
        const auto& metas = parts[w - 1];
        IterationReport iter;
        iter.iteration = w;
        iter.metas = static_cast<int>(metas.size());

        const auto generated = hooks.generate(metas, w);
        std::vector<Response> responses;
        std::map<std::string, std::string> prompts;
        for (std::size_t i = 0; i < generated.size(); ++i) {
            if (!generated[i].ok() || generated[i].value().size() < 2) {
                ++iter.excluded_metas;
                continue;
            }
            prompts[metas[i].id] = metas[i].text;
            for (const auto& r : generated[i].value()) responses.push_back(r);
        }
        iter.responses = static_cast<int>(responses.size());

        std::map<std::string, std::vector<ScoredResponse>> by_meta;
        std::vector<ScoredResponse> all_scored;
        if (!responses.empty()) {
            const auto scored = hooks.score(responses, w);
            for (const auto& slot : scored) {
                if (!slot.ok()) continue;
                by_meta[slot.value().scored.response.meta_id].push_back(slot.value().scored);
                all_scored.push_back(slot.value().scored);
            }
        }
        if (!all_scored.empty()) iter.scores = corpus_stats(all_scored);

        std::vector<MetaScoreStats> stats;
        stats.reserve(by_meta.size());
        for (const auto& [meta_id, scored] : by_meta) {
            if (scored.size() < 2) {
                ++iter.excluded_metas;
                continue;
            }
            stats.push_back(response_stats(scored));
        }
        std::vector<PreferencePair> pairs;
        for (const auto& meta_id : prioritize(stats, config.budget)) {
            auto pair = build_pair(by_meta.at(meta_id), prompts.at(meta_id), config.margin, w);
            if (pair) pairs.push_back(std::move(*pair));
        }
        iter.pairs = static_cast<int>(pairs.size());

        if (pairs.empty()) {
            iter.skipped = true;
        } else {
            iter.mean_loss = hooks.train(pairs, w);
            report.total_pairs += iter.pairs;
        }
        if (hooks.expected_score) {
            iter.expected_score = hooks.expected_score();
            iter.has_expected_score = true;
        }
        report.iterations.push_back(std::move(iter));
    }
    return report;
}

LoopReport run_gateway_loop(const LoopConfig& config, const std::vector<MetaQuestion>& dataset,
                            const std::map<std::string, ProxySet>& proxy_sets, Gateway& gateway) {
    if (config.trainer != TrainerMode::ExportOnly) {
        throw ProxyError(ErrorKind::InvalidConfig,
                         "gateway-backed loop supports only the export trainer");
    }
    LoopHooks hooks;
    hooks.generate = [&](const std::vector<MetaQuestion>& metas, int iteration) {
        ExploreOptions options;
        options.model = config.generator_model;
        if (!config.iteration_models.empty()) {
            const std::size_t idx = static_cast<std::size_t>(iteration) - 1;
            if (idx < config.iteration_models.size() && !config.iteration_models[idx].empty()) {
                options.model = config.iteration_models[idx];
            }
        }
        options.k = config.k;
        options.temperature = config.temperature;
        options.max_tokens = config.max_tokens;
        return explore_many(metas, gateway, options, config.max_in_flight);
    };
    hooks.score = [&](const std::vector<Response>& responses, int) {
        JudgeOptions options;
        options.model = config.judge_model;
        return score_responses(responses, proxy_sets, gateway, config.metric, options,
                               config.max_in_flight);
    };
    hooks.train = [&](const std::vector<PreferencePair>& pairs, int iteration) {
        const auto path = config.out_dir / ("pairs_iter_" + std::to_string(iteration) + ".jsonl");
        export_preference_dataset(pairs, path);
        return 0.0;
    };
    return run_alignment_loop(config, dataset, hooks);
}

ToyTrainer::ToyTrainer(ToyPolicy initial, double beta, double learning_rate, int epochs,
                       int batch_size, int grad_accum, std::uint64_t seed)
    : policy_(std::move(initial)),
      reference_(policy_),
      beta_(beta),
      learning_rate_(learning_rate),
      epochs_(std::max(1, epochs)),
      batch_size_(std::max(1, batch_size)),
      grad_accum_(std::max(1, grad_accum)),
      rng_(seed) {}

double ToyTrainer::train_iteration(
    const std::vector<std::pair<Eigen::ArrayXd, Eigen::ArrayXd>>& pairs) {
    if (pairs.empty()) return 0.0;
    const std::size_t effective_batch =
        static_cast<std::size_t>(batch_size_) * static_cast<std::size_t>(grad_accum_);
    double loss_sum = 0.0;
    long loss_count = 0;
    for (int epoch = 0; epoch < epochs_; ++epoch) {
        std::vector<std::size_t> order(pairs.size());
        std::iota(order.begin(), order.end(), 0);
        portable_shuffle(order, rng_);
        for (std::size_t start = 0; start < order.size(); start += effective_batch) {
            const std::size_t end = std::min(order.size(), start + effective_batch);
            std::vector<std::pair<Eigen::ArrayXd, Eigen::ArrayXd>> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
            for (const auto& [w, l] : batch) {
                LogProbPair lp;
                lp.logp_w_policy = toy_logprob(policy_, w);
                lp.logp_w_ref = toy_logprob(reference_, w);
                lp.logp_l_policy = toy_logprob(policy_, l);
                lp.logp_l_ref = toy_logprob(reference_, l);
                lp.beta = beta_;
                loss_sum += dpo_loss(lp);
                ++loss_count;
            }
            policy_ = toy_dpo_batch_step(policy_, reference_, batch, beta_, learning_rate_);
        }
    }
    reference_ = policy_;
    return loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
}

ToyExperimentResult run_toy_experiment(const ToyWorld& world, const LoopConfig& config,
                                       const ToyExperimentConfig& toy) {
    if (world.num_facts > 20) {
        throw ProxyError(ErrorKind::InvalidInput, "toy experiment limited to L <= 20");
    }
    if (toy.metas_per_iteration < 1) {
        throw ProxyError(ErrorKind::InvalidConfig, "metas_per_iteration must be >= 1");
    }

    std::vector<MetaQuestion> dataset;
    std::map<std::string, ProxySet> proxy_sets;
    const int total_metas = config.iterations * toy.metas_per_iteration;
    for (int i = 0; i < total_metas; ++i) {
        MetaQuestion m = make_meta_question(
            "toy", "Report every fact that holds in this world (episode " + std::to_string(i) +
                       ").");
        proxy_sets.emplace(m.id, world.proxy_set(m.id));
        dataset.push_back(std::move(m));
    }

    ToyTrainer trainer(ToyPolicy::constant(world.num_facts, toy.init_logit), config.beta,
                       config.learning_rate, config.epochs, config.batch_size, config.grad_accum,
                       config.seed + 1);
    std::mt19937_64 sample_rng(config.seed);
    std::map<std::pair<std::string, int>, Eigen::ArrayXd> masks;

    LoopHooks hooks;
    hooks.generate = [&](const std::vector<MetaQuestion>& metas, int) {
        masks.clear();
        std::vector<Expected<std::vector<Response>>> out;
        out.reserve(metas.size());
        for (const auto& meta : metas) {
            std::vector<Response> responses;
            responses.reserve(config.k);
            for (int s = 0; s < config.k; ++s) {
                ToySample sample = toy_sample(trainer.policy(), world, sample_rng);
                Response r;
                r.meta_id = meta.id;
                r.sample_index = s;
                r.text = sample.text;
                r.generator_tag = "toy-policy";
                r.temperature = config.temperature;
                masks.emplace(std::make_pair(meta.id, s), std::move(sample.mask));
                responses.push_back(std::move(r));
            }
            out.emplace_back(std::move(responses));
        }
        return out;
    };
    hooks.score = [&](const std::vector<Response>& responses, int) {
        std::vector<Expected<ScoreOutcome>> out;
        out.reserve(responses.size());
        for (const auto& r : responses) {
            const auto& mask = masks.at({r.meta_id, r.sample_index});
            ScoreOutcome outcome;
            outcome.scored.response = r;
            outcome.scored.metric = config.metric;
            outcome.scored.verdicts = toy_judge_all(mask);
            outcome.scored.score =
                apply_metric(config.metric, outcome.scored.verdicts, world.references);
            for (int j = 0; j < world.num_facts; ++j) {
                JudgeTranscript t;
                t.meta_id = r.meta_id;
                t.sample_index = r.sample_index;
                t.question_index = j;
                t.raw = outcome.scored.verdicts[j] == Verdict::True ? "True" : "Not mentioned";
                t.parsed = outcome.scored.verdicts[j];
                outcome.transcripts.push_back(std::move(t));
            }
            out.emplace_back(std::move(outcome));
        }
        return out;
    };
    hooks.train = [&](const std::vector<PreferencePair>& pairs, int) {
        std::vector<std::pair<Eigen::ArrayXd, Eigen::ArrayXd>> mask_pairs;
        mask_pairs.reserve(pairs.size());
        for (const auto& p : pairs) {
            mask_pairs.emplace_back(masks.at({p.meta_id, p.chosen.sample_index}),
                                    masks.at({p.meta_id, p.rejected.sample_index}));
        }
        return trainer.train_iteration(mask_pairs);
    };
    hooks.expected_score = [&] { return toy_expected_score(trainer.policy(), world); };

    ToyExperimentResult result;
    result.loop = run_alignment_loop(config, dataset, hooks);
    result.final_policy = trainer.policy();
    return result;
}

}  // namespace proxyforge
