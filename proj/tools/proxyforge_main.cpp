// proxyforge: synthesize proxy-QA datasets, explore candidate responses,
// score them with a judge model, build preference pairs, and drive the
// iterative alignment loop. Exit codes: 0 success, 1 usage error, 2 runtime
// error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "proxyforge/config.hpp"
#include "proxyforge/evalharness.hpp"
#include "proxyforge/loop.hpp"
#include "proxyforge/selection.hpp"
#include "proxyforge/stages.hpp"

namespace fs = std::filesystem;
using namespace proxyforge;

namespace {

struct GlobalArgs {
    std::optional<fs::path> config_path;
    std::optional<fs::path> mock_script;
    fs::path out_dir = "proxyforge_out";
    std::optional<unsigned long long> seed;
};

Config resolve_config(const GlobalArgs& args) {
    Config config = load_config(args.config_path);
    if (args.seed) config.set("run.seed", std::to_string(*args.seed));
    return config;
}

int levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int cost = a[i - 1] == b[j - 1] ? 0 : 1;
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
        }
    }
    return d[a.size()][b.size()];
}

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = {"synth",      "explore", "score", "select",
                                                   "stats",      "export-dpo", "loop", "toy",
                                                   "eval",       "compare"};
    return names;
}

std::string suggest_subcommand(const std::string& given) {
    std::string best;
    int best_distance = 1 << 30;
    for (const auto& name : subcommand_names()) {
        const int distance = levenshtein(given, name);
        if (distance < best_distance) {
            best_distance = distance;
            best = name;
        }
    }
    return best_distance <= 4 ? best : "";
}

void write_stage_note(const std::string& name, const StageResult& result) {
    std::cerr << name << ": executed " << result.executed << ", reused " << result.reused
              << ", failed " << result.failed;
    if (result.pending_left > 0) std::cerr << ", pending " << result.pending_left;
    std::cerr << "\n";
}

LoopConfig loop_config_from(const Config& config, const fs::path& out_dir) {
    LoopConfig lc;
    lc.iterations = config.get_int("loop.iterations");
    lc.k = config.get_int("loop.k");
    const auto metric = metric_from_string(config.get_string("loop.metric"));
    if (!metric) {
        throw ProxyError(ErrorKind::ConfigError,
                         "loop.metric must be accuracy or precision, got " +
                             config.get_string("loop.metric"));
    }
    lc.metric = *metric;
    lc.margin = config.get_double("loop.margin");
    lc.budget = config.get_int("loop.budget");
    lc.partition_strategy = config.get_string("loop.partition");
    lc.temperature = config.get_double("sampling.temperature");
    lc.max_tokens = config.get_int("sampling.max_tokens");
    lc.beta = config.get_double("dpo.beta");
    lc.learning_rate = config.get_double("dpo.learning_rate");
    lc.epochs = config.get_int("dpo.epochs");
    lc.batch_size = config.get_int("dpo.batch_size");
    lc.grad_accum = config.get_int("dpo.grad_accum");
    lc.seed = config.get_seed("run.seed");
    lc.max_in_flight = config.get_int("gateway.max_in_flight");
    lc.generator_model = config.get_string("model.generator");
    lc.judge_model = config.get_string("model.judge");
    const auto mode = trainer_mode_from_string(config.get_string("trainer.mode"));
    if (!mode) {
        throw ProxyError(ErrorKind::ConfigError,
                         "trainer.mode must be toy or export, got " +
                             config.get_string("trainer.mode"));
    }
    lc.trainer = *mode;
    const std::string models = config.get_string("loop.models");
    std::size_t start = 0;
    while (start <= models.size() && !models.empty()) {
        std::size_t comma = models.find(',', start);
        if (comma == std::string::npos) comma = models.size();
        lc.iteration_models.push_back(trim(models.substr(start, comma - start)));
        start = comma + 1;
        if (comma == models.size()) break;
    }
    lc.out_dir = out_dir;
    return lc;
}

void save_json(const fs::path& path, const ordered_json& doc) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ProxyError(ErrorKind::Io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

void write_run_manifest(const fs::path& out_dir, const std::string& stage, const Config& config,
                        const std::vector<std::pair<std::string, std::string>>& items) {
    RunManifest manifest;
    manifest.stage = stage;
    manifest.config = config.snapshot();
    std::string preimage = stage + "\n" + manifest.config.dump();
    manifest.run_id = sha256_hex(preimage).substr(0, 12);
    for (const auto& [id, digest] : items) {
        manifest.add_completed(ManifestEntry{id, digest, iso8601_utc_now()});
    }
    manifest.save(out_dir / ("manifest_" + stage + ".json"));
}

}  // namespace

int dispatch(int argc, char** argv) {
    CLI::App app{"proxy-QA preference pipeline"};
    app.allow_extras();  // unknown tokens surface after parsing, with a suggestion
    GlobalArgs global;
    app.add_option("--config", global.config_path, "layered config file")->check(CLI::ExistingFile);
    app.add_option("--seed", global.seed, "run seed");
    app.add_option("--out-dir", global.out_dir, "default output directory");
    app.add_option("--mock-script", global.mock_script,
                   "serve completions from a recorded script (offline mode)")
        ->check(CLI::ExistingFile);

    // synth
    auto* synth = app.add_subcommand("synth", "synthesize meta-questions and proxy pairs");
    std::optional<fs::path> synth_domains;
    int per_domain = 1;
    std::optional<fs::path> synth_out;
    int synth_limit = -1;
    synth->add_option("--domains", synth_domains,
                      "domain list, one per line (default: the built-in 40 domains)")
        ->check(CLI::ExistingFile);
    synth->add_option("--per-domain", per_domain, "meta-questions per domain")->required();
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--limit", synth_limit, "process at most N pending items per sub-stage");

    // explore
    auto* explore = app.add_subcommand("explore", "sample k responses per meta-question");
    fs::path explore_metas;
    std::optional<fs::path> explore_out;
    std::optional<int> explore_k;
    std::optional<double> explore_temperature;
    int explore_limit = -1;
    explore->add_option("--metas", explore_metas, "meta_questions.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    explore->add_option("--k", explore_k, "samples per meta-question");
    explore->add_option("--temperature", explore_temperature, "sampling temperature");
    explore->add_option("--out", explore_out, "responses output file");
    explore->add_option("--limit", explore_limit, "process at most N pending items");

    // score
    auto* score = app.add_subcommand("score", "judge responses against proxy pairs");
    fs::path score_responses_path, score_proxies;
    std::string score_metric = "accuracy";
    std::optional<std::string> score_judge_model;
    std::optional<fs::path> score_out;
    int score_limit = -1;
    score->add_option("--responses", score_responses_path, "responses.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("--proxies", score_proxies, "proxy_sets.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("--metric", score_metric, "accuracy|precision");
    score->add_option("--judge-model", score_judge_model, "judge model name");
    score->add_option("--out", score_out, "scored output file");
    score->add_option("--limit", score_limit, "process at most N pending items");

    // select
    auto* select = app.add_subcommand("select", "build preference pairs from scored responses");
    fs::path select_scored, select_metas;
    std::optional<int> select_budget;
    std::optional<double> select_margin;
    int select_iteration = 1;
    std::optional<fs::path> select_out;
    select->add_option("--scored", select_scored, "scored.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    select->add_option("--metas", select_metas, "meta_questions.jsonl (prompt texts)")
        ->required()
        ->check(CLI::ExistingFile);
    select->add_option("--budget", select_budget, "max meta-questions kept by variance rank");
    select->add_option("--margin", select_margin, "minimum score margin");
    select->add_option("--iteration", select_iteration, "iteration tag for the pairs");
    select->add_option("--out", select_out, "pairs output file");

    // stats
    auto* stats = app.add_subcommand("stats", "score distribution report");
    fs::path stats_scored;
    stats->add_option("--scored", stats_scored, "scored.jsonl")
        ->required()
        ->check(CLI::ExistingFile);

    // export-dpo
    auto* export_dpo = app.add_subcommand("export-dpo", "write the trainer hand-off file");
    fs::path export_pairs;
    std::optional<fs::path> export_out;
    export_dpo->add_option("--pairs", export_pairs, "pairs.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    export_dpo->add_option("--out", export_out, "export output file");

    // loop
    auto* loop = app.add_subcommand("loop", "run the iterative alignment loop");
    std::optional<fs::path> loop_metas, loop_proxies;
    loop->add_option("--metas", loop_metas, "meta_questions.jsonl (export mode)");
    loop->add_option("--proxies", loop_proxies, "proxy_sets.jsonl (export mode)");

    // toy
    auto* toy = app.add_subcommand("toy", "analytic toy-world experiment");
    std::optional<int> toy_L, toy_k, toy_iterations, toy_metas_per_iter;
    std::optional<double> toy_beta, toy_lr, toy_init_logit;
    std::optional<std::string> toy_metric;
    std::optional<fs::path> toy_out;
    toy->add_option("--L", toy_L, "facts per meta-question");
    toy->add_option("--k", toy_k, "samples per meta-question");
    toy->add_option("--iterations", toy_iterations, "loop iterations");
    toy->add_option("--beta", toy_beta, "implicit-reward scale");
    toy->add_option("--lr", toy_lr, "toy learning rate");
    toy->add_option("--init-logit", toy_init_logit, "initial policy logit");
    toy->add_option("--metas-per-iteration", toy_metas_per_iter, "toy metas per iteration");
    toy->add_option("--metric", toy_metric, "accuracy|precision");
    toy->add_option("--out", toy_out, "learning-curve output file");

    // eval
    auto* eval = app.add_subcommand("eval", "proxy-QA evaluation of a generation backend");
    fs::path eval_benchmark;
    std::optional<std::string> eval_gen_model, eval_judge_model;
    std::optional<fs::path> eval_out;
    eval->add_option("--benchmark", eval_benchmark, "benchmark JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--gen-model", eval_gen_model, "generation model name");
    eval->add_option("--judge-model", eval_judge_model, "judge model name");
    eval->add_option("--out", eval_out, "report output file");

    // compare
    auto* compare = app.add_subcommand("compare", "delta between two eval reports");
    fs::path compare_a, compare_b;
    compare->add_option("--a", compare_a, "baseline report")->required()->check(CLI::ExistingFile);
    compare->add_option("--b", compare_b, "comparison report")->required()->check(CLI::ExistingFile);

    // Global flags may appear after the subcommand name.
    for (auto* sub : {synth, explore, score, select, stats, export_dpo, loop, toy, eval, compare}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    const auto extras = app.remaining(true);
    if (app.get_subcommands().empty()) {
        if (!extras.empty()) {
            std::cerr << "unknown subcommand \"" << extras.front() << "\"\n";
            const std::string suggestion = suggest_subcommand(extras.front());
            if (!suggestion.empty()) std::cerr << "did you mean \"" << suggestion << "\"?\n";
        } else {
            std::cerr << "a subcommand is required\n";
        }
        std::cerr << app.help() << "\n";
        return 1;
    }
    if (!extras.empty()) {
        std::cerr << "unexpected arguments:";
        for (const auto& extra : extras) std::cerr << " " << extra;
        std::cerr << "\n";
        return 1;
    }

    try {
        Config config = resolve_config(global);
        const fs::path out_dir = global.out_dir;

        if (*synth) {
            auto gateway = make_gateway(config, global.mock_script);
            std::vector<DomainSpec> domains;
            if (synth_domains) {
                domains = load_domains(*synth_domains, per_domain);
            } else {
                for (const auto& name : default_domains()) {
                    domains.push_back(DomainSpec{name, per_domain});
                }
            }
            const auto result = run_synth_stage(config, *gateway, domains,
                                                synth_out.value_or(out_dir), synth_limit);
            write_stage_note("synth_metas", result.metas);
            write_stage_note("synth_proxies", result.proxies);
            if (result.metas.failed > 0 || result.proxies.failed > 0) return 2;
            return 0;
        }
        if (*explore) {
            if (explore_k) config.set("sampling.k", std::to_string(*explore_k));
            if (explore_temperature) {
                config.set("sampling.temperature", std::to_string(*explore_temperature));
            }
            auto gateway = make_gateway(config, global.mock_script);
            const auto result =
                run_explore_stage(config, *gateway, explore_metas,
                                  explore_out.value_or(out_dir / "responses.jsonl"), explore_limit);
            write_stage_note("explore", result);
            return result.failed > 0 ? 2 : 0;
        }
        if (*score) {
            if (score_judge_model) config.set("model.judge", *score_judge_model);
            const auto metric = metric_from_string(score_metric);
            if (!metric) {
                std::cerr << "--metric must be accuracy or precision\n";
                return 1;
            }
            auto gateway = make_gateway(config, global.mock_script);
            const fs::path out = score_out.value_or(out_dir / "scored.jsonl");
            const fs::path transcripts = out.parent_path() / "transcripts.jsonl";
            const auto result = run_score_stage(config, *gateway, score_responses_path,
                                                score_proxies, *metric, out, transcripts,
                                                score_limit);
            write_stage_note("score", result);
            return result.failed > 0 ? 2 : 0;
        }
        if (*select) {
            if (select_budget) config.set("selection.budget", std::to_string(*select_budget));
            if (select_margin) config.set("selection.margin", std::to_string(*select_margin));
            const auto result = run_select_stage(
                config, select_scored, select_metas, config.get_int("selection.budget"),
                config.get_double("selection.margin"), select_iteration,
                select_out.value_or(out_dir / "pairs.jsonl"));
            write_stage_note("select", result);
            return result.failed > 0 ? 2 : 0;
        }
        if (*stats) {
            std::vector<ScoredResponse> scored;
            for (const auto& row : read_jsonl(stats_scored)) {
                scored.push_back(scored_response_from_record(row));
            }
            const DistributionReport report = corpus_stats(scored);
            std::cout << format_table(report) << "\n" << to_record(report).dump() << "\n";
            return 0;
        }
        if (*export_dpo) {
            const auto result = run_export_stage(config, export_pairs,
                                                 export_out.value_or(out_dir / "dpo_export.jsonl"));
            write_stage_note("export_dpo", result);
            return result.failed > 0 ? 2 : 0;
        }
        if (*loop) {
            LoopConfig lc = loop_config_from(config, out_dir);
            if (lc.trainer == TrainerMode::ToySimulator) {
                const ToyWorld world = ToyWorld::uniform(config.get_int("toy.facts"));
                ToyExperimentConfig toy_cfg;
                toy_cfg.metas_per_iteration = config.get_int("toy.metas_per_iteration");
                toy_cfg.init_logit = config.get_double("toy.init_logit");
                lc.learning_rate = config.get_double("toy.lr");
                const auto result = run_toy_experiment(world, lc, toy_cfg);
                const fs::path report_path = out_dir / "loop_report.json";
                save_json(report_path, to_record(result.loop));
                write_run_manifest(out_dir, "loop", config,
                                   {{"report", file_sha256(report_path)}});
                std::cout << to_record(result.loop).dump(2) << "\n";
                return 0;
            }
            if (!loop_metas || !loop_proxies) {
                std::cerr << "loop in export mode requires --metas and --proxies\n";
                return 1;
            }
            std::vector<MetaQuestion> metas;
            for (const auto& row : read_jsonl(*loop_metas)) {
                metas.push_back(meta_question_from_record(row));
            }
            std::map<std::string, ProxySet> proxy_sets;
            for (auto& set : group_proxy_rows(read_jsonl(*loop_proxies))) {
                proxy_sets.emplace(set.meta_id, std::move(set));
            }
            auto gateway = make_gateway(config, global.mock_script);
            const auto report = run_gateway_loop(lc, metas, proxy_sets, *gateway);
            const fs::path report_path = out_dir / "loop_report.json";
            save_json(report_path, to_record(report));
            write_run_manifest(out_dir, "loop", config, {{"report", file_sha256(report_path)}});
            std::cout << to_record(report).dump(2) << "\n";
            return 0;
        }
        if (*toy) {
            if (toy_L) config.set("toy.facts", std::to_string(*toy_L));
            if (toy_k) config.set("loop.k", std::to_string(*toy_k));
            if (toy_iterations) config.set("loop.iterations", std::to_string(*toy_iterations));
            if (toy_beta) config.set("dpo.beta", std::to_string(*toy_beta));
            if (toy_lr) config.set("toy.lr", std::to_string(*toy_lr));
            if (toy_init_logit) config.set("toy.init_logit", std::to_string(*toy_init_logit));
            if (toy_metas_per_iter) {
                config.set("toy.metas_per_iteration", std::to_string(*toy_metas_per_iter));
            }
            if (toy_metric) config.set("loop.metric", *toy_metric);
            LoopConfig lc = loop_config_from(config, out_dir);
            lc.trainer = TrainerMode::ToySimulator;
            lc.learning_rate = config.get_double("toy.lr");
            const ToyWorld world = ToyWorld::uniform(config.get_int("toy.facts"));
            ToyExperimentConfig toy_cfg;
            toy_cfg.metas_per_iteration = config.get_int("toy.metas_per_iteration");
            toy_cfg.init_logit = config.get_double("toy.init_logit");
            const auto result = run_toy_experiment(world, lc, toy_cfg);
            ordered_json curve = to_record(result.loop);
            curve["config"] = config.snapshot();
            const fs::path curve_path = toy_out.value_or(out_dir / "curve.json");
            save_json(curve_path, curve);
            write_run_manifest(curve_path.parent_path(), "toy", config,
                               {{"curve", file_sha256(curve_path)}});
            std::cout << "expected score: " << result.loop.initial_expected_score;
            for (const auto& it : result.loop.iterations) {
                std::cout << " -> " << it.expected_score;
            }
            std::cout << "\n";
            return 0;
        }
        if (*eval) {
            if (eval_gen_model) config.set("model.generator", *eval_gen_model);
            if (eval_judge_model) config.set("model.evaluator", *eval_judge_model);
            auto gateway = make_gateway(config, global.mock_script);
            const auto benchmark = load_benchmark(eval_benchmark);
            EvalOptions options;
            options.generator_model = config.get_string("model.generator");
            options.judge_model = config.get_string("model.evaluator");
            options.temperature = config.get_double("eval.temperature");
            options.max_tokens = config.get_int("sampling.max_tokens");
            options.max_in_flight = config.get_int("gateway.max_in_flight");
            std::vector<JudgeTranscript> transcripts;
            const EvalReport report = evaluate(benchmark, *gateway, options, &transcripts);
            const fs::path report_path = eval_out.value_or(out_dir / "report.json");
            save_json(report_path, to_record(report));
            std::vector<std::string> transcript_lines;
            for (const auto& t : transcripts) {
                ordered_json j{{"meta_id", t.meta_id},
                               {"sample_index", t.sample_index},
                               {"question_index", t.question_index},
                               {"raw", t.raw},
                               {"parsed", std::string(to_string(t.parsed))}};
                if (!t.error.empty()) j["error"] = t.error;
                transcript_lines.push_back(j.dump());
            }
            write_lines(report_path.parent_path() / "eval_transcripts.jsonl", transcript_lines);
            write_run_manifest(report_path.parent_path(), "eval", config,
                               {{"report", file_sha256(report_path)}});
            std::cout << "overall accuracy: " << report.overall_pct << "% over "
                      << report.evaluated << " meta-questions (" << report.failed << " failed)\n";
            return 0;
        }
        if (*compare) {
            const auto a = eval_report_from_record(ordered_json::parse(read_file(compare_a)));
            const auto b = eval_report_from_record(ordered_json::parse(read_file(compare_b)));
            const DeltaReport delta = compare_reports(a, b);
            std::cout << to_record(delta).dump(2) << "\n";
            return 0;
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const ProxyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int main(int argc, char** argv) { return dispatch(argc, argv); }
