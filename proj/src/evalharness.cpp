#include "proxyforge/evalharness.hpp"

#include <algorithm>

namespace proxyforge {

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path) {
    std::vector<BenchmarkItem> items;
    for (const auto& row : read_jsonl(path)) items.push_back(convert_benchmark_record(row));
    if (items.empty()) throw ProxyError(ErrorKind::InvalidInput, "empty benchmark " + path.string());
    return items;
}

void save_benchmark(const std::vector<BenchmarkItem>& items, const std::filesystem::path& path) {
    std::vector<std::string> lines;
    lines.reserve(items.size());
    for (const auto& item : items) {
        ordered_json pairs = ordered_json::array();
        for (const auto& p : item.proxies.pairs) {
            pairs.push_back(ordered_json{{"question", p.question},
                                         {"reference", std::string(to_string(p.reference))},
                                         {"index", p.index}});
        }
        lines.push_back(ordered_json{{"id", item.meta.id},
                                     {"domain", item.meta.domain},
                                     {"text", item.meta.text},
                                     {"pairs", pairs}}
                            .dump());
    }
    write_lines(path, lines);
}

BenchmarkItem convert_benchmark_record(const ordered_json& row) {
    BenchmarkItem item;
    item.meta = meta_question_from_record(row);
    item.proxies.meta_id = item.meta.id;
    if (!row.contains("pairs") || !row.at("pairs").is_array() || row.at("pairs").empty()) {
        throw ProxyError(ErrorKind::InvalidInput,
                         "benchmark row " + item.meta.id + " has no proxy pairs");
    }
    for (const auto& p : row.at("pairs")) item.proxies.pairs.push_back(proxy_pair_from_record(p));
    return item;
}

std::string benchmark_id(const std::vector<BenchmarkItem>& items) {
    std::string preimage;
    for (const auto& item : items) {
        preimage += item.meta.id;
        preimage += '\x1e';
        for (const auto& p : item.proxies.pairs) {
            preimage += p.question;
            preimage += '\x1f';
            preimage += to_string(p.reference);
            preimage += '\x1f';
        }
    }
    return sha256_hex(preimage).substr(0, 16);
}

ordered_json to_record(const EvalReport& report) {
    ordered_json per_meta = ordered_json::array();
    for (const auto& e : report.per_meta) {
        per_meta.push_back(ordered_json{{"meta_id", e.meta_id},
                                        {"domain", e.domain},
                                        {"score", e.score},
                                        {"questions", e.questions}});
    }
    ordered_json per_domain = ordered_json::object();
    for (const auto& [domain, pct] : report.per_domain_pct) per_domain[domain] = pct;
    return ordered_json{{"benchmark_id", report.benchmark_id},
                        {"overall_pct", report.overall_pct},
                        {"evaluated", report.evaluated},
                        {"failed", report.failed},
                        {"per_domain_pct", per_domain},
                        {"per_meta", per_meta}};
}

EvalReport eval_report_from_record(const ordered_json& j) {
    EvalReport report;
    report.benchmark_id = j.at("benchmark_id").get<std::string>();
    report.overall_pct = j.at("overall_pct").get<double>();
    report.evaluated = j.at("evaluated").get<int>();
    report.failed = j.at("failed").get<int>();
    for (const auto& [domain, pct] : j.at("per_domain_pct").items()) {
        report.per_domain_pct[domain] = pct.get<double>();
    }
    for (const auto& e : j.at("per_meta")) {
        report.per_meta.push_back(EvalEntry{e.at("meta_id").get<std::string>(),
                                            e.at("domain").get<std::string>(),
                                            e.at("score").get<double>(),
                                            e.at("questions").get<int>()});
    }
    return report;
}

EvalReport evaluate(const std::vector<BenchmarkItem>& benchmark, Gateway& gateway,
                    const EvalOptions& options, std::vector<JudgeTranscript>* transcripts) {
    if (benchmark.empty()) throw ProxyError(ErrorKind::InvalidInput, "empty benchmark");

    EvalReport report;
    report.benchmark_id = benchmark_id(benchmark);

    // One generation per meta-question. explore() insists on k >= 2 because
    // it feeds pair construction; evaluation wants a single answer, so issue
    // the requests directly.
    std::vector<ChatRequest> requests;
    requests.reserve(benchmark.size());
    for (const auto& item : benchmark) {
        ChatRequest req;
        req.model = options.generator_model;
        req.messages = {{"user", item.meta.text}};
        req.temperature = options.temperature;
        req.n = 1;
        req.max_tokens = options.max_tokens;
        req.request_tag = "eval-gen:" + item.meta.id;
        requests.push_back(std::move(req));
    }
    const auto generations = gateway.complete_many(requests, options.max_in_flight);

    std::vector<Response> responses;
    std::vector<std::size_t> response_item;  // index into benchmark
    for (std::size_t i = 0; i < generations.size(); ++i) {
        if (!generations[i].ok()) {
            ++report.failed;
            continue;
        }
        Response r;
        r.meta_id = benchmark[i].meta.id;
        r.sample_index = 0;
        r.text = generations[i].value().choices.front();
        r.generator_tag = options.generator_model;
        r.temperature = options.temperature;
        responses.push_back(std::move(r));
        response_item.push_back(i);
    }

    std::map<std::string, ProxySet> proxy_sets;
    for (const auto& item : benchmark) proxy_sets.emplace(item.meta.id, item.proxies);
    JudgeOptions judge;
    judge.model = options.judge_model;
    const auto scored = score_responses(responses, proxy_sets, gateway, Metric::Accuracy, judge,
                                        options.max_in_flight);

    double sum = 0.0;
    std::map<std::string, std::pair<double, int>> domain_acc;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        const auto& item = benchmark[response_item[i]];
        if (!scored[i].ok()) {
            ++report.failed;
            continue;
        }
        const auto& outcome = scored[i].value();
        EvalEntry entry;
        entry.meta_id = item.meta.id;
        entry.domain = item.meta.domain;
        entry.score = outcome.scored.score;
        entry.questions = static_cast<int>(outcome.scored.verdicts.size());
        sum += entry.score;
        auto& acc = domain_acc[entry.domain];
        acc.first += entry.score;
        acc.second += 1;
        report.per_meta.push_back(std::move(entry));
        if (transcripts) {
            for (const auto& t : outcome.transcripts) transcripts->push_back(t);
        }
    }
    report.evaluated = static_cast<int>(report.per_meta.size());
    if (report.evaluated == 0) {
        throw ProxyError(ErrorKind::InvalidInput, "no meta-question evaluated successfully");
    }
    report.overall_pct = sum / report.evaluated * 100.0;
    for (const auto& [domain, acc] : domain_acc) {
        report.per_domain_pct[domain] = acc.first / acc.second * 100.0;
    }
    return report;
}

ordered_json to_record(const DeltaReport& report) {
    ordered_json per_meta = ordered_json::array();
    for (const auto& e : report.per_meta) {
        per_meta.push_back(ordered_json{{"meta_id", e.meta_id},
                                        {"score_a", e.score_a},
                                        {"score_b", e.score_b},
                                        {"delta", e.delta}});
    }
    return ordered_json{{"benchmark_id", report.benchmark_id},
                        {"overall_a", report.overall_a},
                        {"overall_b", report.overall_b},
                        {"delta", report.delta},
                        {"relative_gain_pct", report.relative_gain_pct},
                        {"per_meta", per_meta}};
}

DeltaReport compare_reports(const EvalReport& a, const EvalReport& b) {
    if (a.benchmark_id != b.benchmark_id) {
        throw ProxyError(ErrorKind::InvalidInput, "benchmark mismatch: " + a.benchmark_id +
                                                      " vs " + b.benchmark_id);
    }
    DeltaReport delta;
    delta.benchmark_id = a.benchmark_id;
    delta.overall_a = a.overall_pct;
    delta.overall_b = b.overall_pct;
    delta.delta = b.overall_pct - a.overall_pct;
    delta.relative_gain_pct =
        a.overall_pct != 0.0 ? (b.overall_pct - a.overall_pct) / a.overall_pct * 100.0 : 0.0;

    std::map<std::string, double> scores_b;
    for (const auto& e : b.per_meta) scores_b[e.meta_id] = e.score;
    for (const auto& e : a.per_meta) {
        const auto it = scores_b.find(e.meta_id);
        if (it == scores_b.end()) continue;
        delta.per_meta.push_back(DeltaEntry{e.meta_id, e.score, it->second, it->second - e.score});
    }
    return delta;
}

}  // namespace proxyforge
