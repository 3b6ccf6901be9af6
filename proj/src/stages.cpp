#include "proxyforge/stages.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_map>

#include "proxyforge/dpo.hpp"
#include "proxyforge/exploration.hpp"
#include "proxyforge/http_backend.hpp"
#include "proxyforge/reward.hpp"
#include "proxyforge/selection.hpp"

namespace proxyforge {

namespace {

std::string digest_lines(const std::vector<std::string>& lines) {
    std::string joined;
    for (const auto& l : lines) {
        joined += l;
        joined += '\n';
    }
    return sha256_hex(joined);
}

std::string stage_run_id(const StageSpec& spec) {
    std::string preimage = spec.stage_name + "\n" + spec.config_snapshot.dump() + "\n";
    for (const auto& id : spec.item_ids) {
        preimage += id;
        preimage += '\n';
    }
    return sha256_hex(preimage).substr(0, 12);
}

// Raw line strings of an existing output file grouped by item id, used to
// reuse completed items verbatim.
std::unordered_map<std::string, std::vector<std::string>> group_existing(
    const std::filesystem::path& path,
    const std::function<std::string(const ordered_json&)>& row_item_id) {
    std::unordered_map<std::string, std::vector<std::string>> out;
    if (!row_item_id || !std::filesystem::exists(path)) return out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            out[row_item_id(ordered_json::parse(line))].push_back(line);
        } catch (const std::exception&) {
            // stale partial write; drop the row and let the item re-execute
        }
    }
    return out;
}

}  // namespace

std::filesystem::path manifest_path_for(const std::filesystem::path& out_path,
                                        const std::string& stage_name) {
    return out_path.parent_path() / ("manifest_" + stage_name + ".json");
}

StageResult run_stage(const StageSpec& spec) {
    StageResult result;
    result.manifest_path = manifest_path_for(spec.out_path, spec.stage_name);

    RunManifest manifest;
    if (std::filesystem::exists(result.manifest_path)) {
        manifest = RunManifest::load(result.manifest_path);
        if (manifest.stage != spec.stage_name) {
            throw ProxyError(ErrorKind::InvalidInput,
                             "manifest at " + result.manifest_path.string() + " belongs to stage " +
                                 manifest.stage);
        }
    } else {
        manifest.stage = spec.stage_name;
    }
    manifest.run_id = stage_run_id(spec);
    manifest.config = spec.config_snapshot;

    ResumePlan plan = plan_resume(manifest, spec.item_ids);
    result.warnings = plan.warnings;

    auto existing = group_existing(spec.out_path, spec.row_item_id);
    auto existing_side = group_existing(spec.side_path.value_or(""), spec.side_row_item_id);

    // A reusable item needs its rows present and matching the recorded
    // digest; anything else re-executes.
    std::map<std::string, std::string> digests;
    for (const auto& e : manifest.completed) digests[e.item_id] = e.digest;
    std::vector<std::string> pending;
    std::set<std::string> reusable;
    for (const auto& id : spec.item_ids) {
        if (plan.reusable.count(id)) {
            const auto it = existing.find(id);
            if (it != existing.end() && digest_lines(it->second) == digests[id]) {
                reusable.insert(id);
                continue;
            }
            result.warnings.push_back("output rows for completed item " + id +
                                      " missing or stale; re-executing");
        }
        pending.push_back(id);
    }
    // Drop manifest entries that are being re-executed.
    std::erase_if(manifest.completed, [&](const ManifestEntry& e) {
        return !reusable.count(e.item_id) &&
               std::find(spec.item_ids.begin(), spec.item_ids.end(), e.item_id) !=
                   spec.item_ids.end();
    });
    manifest.failed.clear();
    result.reused = static_cast<int>(reusable.size());

    if (spec.item_limit >= 0 && static_cast<int>(pending.size()) > spec.item_limit) {
        result.pending_left = static_cast<int>(pending.size()) - spec.item_limit;
        pending.resize(spec.item_limit);
    }

    std::unordered_map<std::string, ItemOutcome> fresh;
    try {
        if (!pending.empty()) {
            const auto outcomes = spec.execute(pending);
            if (outcomes.size() != pending.size()) {
                throw ProxyError(ErrorKind::InvalidInput, "stage produced wrong outcome count");
            }
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                if (!outcomes[i].ok()) {
                    manifest.failed.push_back(pending[i]);
                    ++result.failed;
                    std::cerr << spec.stage_name << ": item " << pending[i] << " failed: "
                              << outcomes[i].error().message << "\n";
                    continue;
                }
                const auto& outcome = outcomes[i].value();
                manifest.add_completed(
                    ManifestEntry{pending[i], digest_lines(outcome.lines), iso8601_utc_now()});
                if (outcome.flagged &&
                    std::find(manifest.flagged.begin(), manifest.flagged.end(), pending[i]) ==
                        manifest.flagged.end()) {
                    manifest.flagged.push_back(pending[i]);
                }
                fresh[pending[i]] = outcome;
                ++result.executed;
            }
        }
    } catch (...) {
        manifest.save(result.manifest_path);  // keep partial progress
        throw;
    }

    std::vector<std::string> lines;
    std::vector<std::string> side_lines;
    for (const auto& id : spec.item_ids) {
        if (const auto it = fresh.find(id); it != fresh.end()) {
            lines.insert(lines.end(), it->second.lines.begin(), it->second.lines.end());
            side_lines.insert(side_lines.end(), it->second.side_lines.begin(),
                              it->second.side_lines.end());
        } else if (reusable.count(id)) {
            const auto& rows = existing[id];
            lines.insert(lines.end(), rows.begin(), rows.end());
            if (const auto side = existing_side.find(id); side != existing_side.end()) {
                side_lines.insert(side_lines.end(), side->second.begin(), side->second.end());
            }
        }
    }
    write_lines(spec.out_path, lines);
    if (spec.side_path) write_lines(*spec.side_path, side_lines);
    manifest.save(result.manifest_path);

    for (const auto& w : result.warnings) std::cerr << spec.stage_name << ": " << w << "\n";
    return result;
}

std::vector<DomainSpec> load_domains(const std::filesystem::path& path, int per_domain) {
    if (per_domain < 1) throw ProxyError(ErrorKind::InvalidConfig, "per-domain count must be >= 1");
    std::ifstream in(path);
    if (!in) throw ProxyError(ErrorKind::Io, "cannot open domains file " + path.string());
    std::vector<DomainSpec> domains;
    std::string line;
    while (std::getline(in, line)) {
        const std::string name = trim(line);
        if (name.empty() || name[0] == '#') continue;
        domains.push_back(DomainSpec{name, per_domain});
    }
    if (domains.empty()) {
        throw ProxyError(ErrorKind::InvalidInput, "no domains in " + path.string());
    }
    return domains;
}

namespace {

SynthOptions synth_options(const Config& config) {
    SynthOptions options;
    options.model = config.get_string("model.synthesizer");
    options.temperature = config.get_double("sampling.temperature");
    options.max_tokens = config.get_int("sampling.max_tokens");
    options.batch_size = config.get_int("synth.batch_size");
    options.batch_cap = config.get_int("synth.batch_cap");
    options.min_pairs = config.get_int("synth.min_pairs");
    options.true_majority = config.get_double("synth.true_majority");
    options.retry_cap = config.get_int("synth.retry_cap");
    return options;
}

}  // namespace

SynthStageResult run_synth_stage(const Config& config, Gateway& gateway,
                                 const std::vector<DomainSpec>& domains,
                                 const std::filesystem::path& out_dir, int item_limit) {
    SynthStageResult result;
    result.meta_path = out_dir / "meta_questions.jsonl";
    result.proxy_path = out_dir / "proxy_sets.jsonl";
    const SynthOptions options = synth_options(config);

    StageSpec metas_spec;
    metas_spec.stage_name = "synth_metas";
    metas_spec.out_path = result.meta_path;
    metas_spec.config_snapshot = config.snapshot();
    std::map<std::string, DomainSpec> by_name;
    for (const auto& d : domains) {
        metas_spec.item_ids.push_back(d.name);
        by_name[d.name] = d;
    }
    metas_spec.row_item_id = [](const ordered_json& row) {
        return row.at("domain").get<std::string>();
    };
    metas_spec.item_limit = item_limit;
    metas_spec.execute = [&](const std::vector<std::string>& pending) {
        std::vector<Expected<ItemOutcome>> outcomes;
        for (const auto& name : pending) {
            try {
                ItemOutcome outcome;
                for (const auto& m : synthesize_meta_questions(by_name.at(name), gateway, options)) {
                    outcome.lines.push_back(to_record(m).dump());
                }
                outcomes.emplace_back(std::move(outcome));
            } catch (const ProxyError& e) {
                outcomes.emplace_back(to_error_info(e));
            }
        }
        return outcomes;
    };
    result.metas = run_stage(metas_spec);

    std::vector<MetaQuestion> metas;
    for (const auto& row : read_jsonl(result.meta_path)) {
        metas.push_back(meta_question_from_record(row));
    }

    StageSpec proxies_spec;
    proxies_spec.stage_name = "synth_proxies";
    proxies_spec.out_path = result.proxy_path;
    proxies_spec.config_snapshot = config.snapshot();
    std::map<std::string, MetaQuestion> by_id;
    for (const auto& m : metas) {
        proxies_spec.item_ids.push_back(m.id);
        by_id[m.id] = m;
    }
    proxies_spec.row_item_id = [](const ordered_json& row) {
        return row.at("meta_id").get<std::string>();
    };
    proxies_spec.item_limit = item_limit;
    proxies_spec.execute = [&](const std::vector<std::string>& pending) {
        std::vector<Expected<ItemOutcome>> outcomes;
        for (const auto& id : pending) {
            try {
                const ProxySet set = synthesize_proxy_pairs(by_id.at(id), gateway, options);
                ItemOutcome outcome;
                outcome.flagged = set.flagged;
                for (const auto& p : set.pairs) {
                    outcome.lines.push_back(to_record(p, set.meta_id).dump());
                }
                outcomes.emplace_back(std::move(outcome));
            } catch (const ProxyError& e) {
                outcomes.emplace_back(to_error_info(e));
            }
        }
        return outcomes;
    };
    result.proxies = run_stage(proxies_spec);
    return result;
}

StageResult run_explore_stage(const Config& config, Gateway& gateway,
                              const std::filesystem::path& metas_path,
                              const std::filesystem::path& out_path, int item_limit) {
    std::vector<MetaQuestion> metas;
    for (const auto& row : read_jsonl(metas_path)) metas.push_back(meta_question_from_record(row));

    ExploreOptions options;
    options.model = config.get_string("model.generator");
    options.k = config.get_int("sampling.k");
    options.temperature = config.get_double("sampling.temperature");
    options.max_tokens = config.get_int("sampling.max_tokens");

    StageSpec spec;
    spec.stage_name = "explore";
    spec.out_path = out_path;
    spec.config_snapshot = config.snapshot();
    std::map<std::string, MetaQuestion> by_id;
    for (const auto& m : metas) {
        spec.item_ids.push_back(m.id);
        by_id[m.id] = m;
    }
    spec.row_item_id = [](const ordered_json& row) {
        return row.at("meta_id").get<std::string>();
    };
    spec.item_limit = item_limit;
    spec.execute = [&](const std::vector<std::string>& pending) {
        std::vector<MetaQuestion> batch;
        batch.reserve(pending.size());
        for (const auto& id : pending) batch.push_back(by_id.at(id));
        const auto generated =
            explore_many(batch, gateway, options, config.get_int("gateway.max_in_flight"));
        std::vector<Expected<ItemOutcome>> outcomes;
        outcomes.reserve(generated.size());
        for (const auto& slot : generated) {
            if (!slot.ok()) {
                outcomes.emplace_back(slot.error());
                continue;
            }
            ItemOutcome outcome;
            for (const auto& r : slot.value()) outcome.lines.push_back(to_record(r).dump());
            outcomes.emplace_back(std::move(outcome));
        }
        return outcomes;
    };
    return run_stage(spec);
}

namespace {

std::string response_item_id(const std::string& meta_id, int sample_index) {
    return meta_id + ":" + std::to_string(sample_index);
}

ordered_json transcript_record(const JudgeTranscript& t) {
    ordered_json j{{"meta_id", t.meta_id},
                   {"sample_index", t.sample_index},
                   {"question_index", t.question_index},
                   {"raw", t.raw},
                   {"parsed", std::string(to_string(t.parsed))}};
    if (!t.error.empty()) j["error"] = t.error;
    return j;
}

}  // namespace

StageResult run_score_stage(const Config& config, Gateway& gateway,
                            const std::filesystem::path& responses_path,
                            const std::filesystem::path& proxies_path, Metric metric,
                            const std::filesystem::path& out_path,
                            const std::filesystem::path& transcripts_path, int item_limit) {
    std::vector<Response> responses;
    for (const auto& row : read_jsonl(responses_path)) {
        responses.push_back(response_from_record(row));
    }
    std::map<std::string, ProxySet> proxy_sets;
    for (auto& set : group_proxy_rows(read_jsonl(proxies_path))) {
        proxy_sets.emplace(set.meta_id, std::move(set));
    }

    JudgeOptions judge;
    judge.model = config.get_string("model.judge");

    StageSpec spec;
    spec.stage_name = "score";
    spec.out_path = out_path;
    spec.side_path = transcripts_path;
    spec.config_snapshot = config.snapshot();
    std::map<std::string, Response> by_id;
    for (const auto& r : responses) {
        const std::string id = response_item_id(r.meta_id, r.sample_index);
        spec.item_ids.push_back(id);
        by_id[id] = r;
    }
    spec.row_item_id = [](const ordered_json& row) {
        const auto& r = row.at("response");
        return response_item_id(r.at("meta_id").get<std::string>(),
                                r.at("sample_index").get<int>());
    };
    spec.side_row_item_id = [](const ordered_json& row) {
        return response_item_id(row.at("meta_id").get<std::string>(),
                                row.at("sample_index").get<int>());
    };
    spec.item_limit = item_limit;
    spec.execute = [&](const std::vector<std::string>& pending) {
        std::vector<Response> batch;
        batch.reserve(pending.size());
        for (const auto& id : pending) batch.push_back(by_id.at(id));
        const auto scored = score_responses(batch, proxy_sets, gateway, metric, judge,
                                            config.get_int("gateway.max_in_flight"));
        std::vector<Expected<ItemOutcome>> outcomes;
        outcomes.reserve(scored.size());
        for (const auto& slot : scored) {
            if (!slot.ok()) {
                outcomes.emplace_back(slot.error());
                continue;
            }
            ItemOutcome outcome;
            outcome.lines.push_back(to_record(slot.value().scored).dump());
            for (const auto& t : slot.value().transcripts) {
                outcome.side_lines.push_back(transcript_record(t).dump());
            }
            outcomes.emplace_back(std::move(outcome));
        }
        return outcomes;
    };
    return run_stage(spec);
}

StageResult run_select_stage(const Config& config, const std::filesystem::path& scored_path,
                             const std::filesystem::path& metas_path, int budget, double margin,
                             int iteration, const std::filesystem::path& out_path) {
    std::map<std::string, std::vector<ScoredResponse>> by_meta;
    for (const auto& row : read_jsonl(scored_path)) {
        ScoredResponse s = scored_response_from_record(row);
        by_meta[s.response.meta_id].push_back(std::move(s));
    }
    std::map<std::string, std::string> prompts;
    for (const auto& row : read_jsonl(metas_path)) {
        const MetaQuestion m = meta_question_from_record(row);
        prompts[m.id] = m.text;
    }

    std::vector<MetaScoreStats> stats;
    for (const auto& [meta_id, scored] : by_meta) {
        if (scored.size() < 2) continue;
        stats.push_back(response_stats(scored));
    }
    const auto ranked = prioritize(stats, budget);

    StageSpec spec;
    spec.stage_name = "select";
    spec.out_path = out_path;
    spec.config_snapshot = config.snapshot();
    spec.item_ids = ranked;  // output follows variance ranking
    spec.row_item_id = [](const ordered_json& row) {
        return row.at("meta_id").get<std::string>();
    };
    spec.execute = [&](const std::vector<std::string>& pending) {
        std::vector<Expected<ItemOutcome>> outcomes;
        for (const auto& id : pending) {
            const auto prompt = prompts.find(id);
            if (prompt == prompts.end()) {
                outcomes.emplace_back(
                    ErrorInfo{ErrorKind::InvalidInput, "meta text not found for " + id});
                continue;
            }
            ItemOutcome outcome;
            const auto pair = build_pair(by_meta.at(id), prompt->second, margin, iteration);
            if (pair) outcome.lines.push_back(to_record(*pair).dump());
            outcomes.emplace_back(std::move(outcome));
        }
        return outcomes;
    };
    return run_stage(spec);
}

StageResult run_export_stage(const Config& config, const std::filesystem::path& pairs_path,
                             const std::filesystem::path& out_path) {
    std::vector<PreferencePair> pairs;
    for (const auto& row : read_jsonl(pairs_path)) {
        pairs.push_back(preference_pair_from_record(row));
    }
    if (pairs.empty()) {
        throw ProxyError(ErrorKind::InvalidInput, "no preference pairs in " + pairs_path.string());
    }

    StageSpec spec;
    spec.stage_name = "export_dpo";
    spec.out_path = out_path;
    spec.config_snapshot = config.snapshot();
    std::map<std::string, PreferencePair> by_id;
    for (const auto& p : pairs) {
        const std::string id = p.meta_id + ":" + std::to_string(p.iteration);
        spec.item_ids.push_back(id);
        by_id[id] = p;
    }
    spec.row_item_id = [](const ordered_json& row) {
        return row.at("id").get<std::string>() + ":" + std::to_string(row.at("iteration").get<int>());
    };
    spec.execute = [&](const std::vector<std::string>& pending) {
        std::vector<Expected<ItemOutcome>> outcomes;
        for (const auto& id : pending) {
            ItemOutcome outcome;
            outcome.lines.push_back(export_row(by_id.at(id)).dump());
            outcomes.emplace_back(std::move(outcome));
        }
        return outcomes;
    };
    return run_stage(spec);
}

std::shared_ptr<Gateway> make_gateway(const Config& config,
                                      const std::optional<std::filesystem::path>& mock_script) {
    GatewayOptions options;
    options.retry_cap = config.get_int("gateway.retry_cap");
    options.backoff_base_ms = config.get_int("gateway.backoff_base_ms");
    options.timeout_ms = config.get_int("gateway.timeout_ms");
    options.jitter_seed = config.get_seed("run.seed");

    std::shared_ptr<Backend> backend;
    if (mock_script) {
        backend = std::make_shared<MockBackend>(MockScript::load(*mock_script));
    } else {
        HttpBackendOptions http;
        http.base_url = config.get_string("gateway.base_url");
        http.api_key = config.get_string("gateway.api_key");
        http.timeout_ms = options.timeout_ms;
        backend = std::make_shared<HttpBackend>(http);
    }
    return std::make_shared<Gateway>(std::move(backend), std::move(options));
}

}  // namespace proxyforge
