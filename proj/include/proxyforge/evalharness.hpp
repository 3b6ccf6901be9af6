#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proxyforge/gateway.hpp"
#include "proxyforge/reward.hpp"
#include "proxyforge/types.hpp"

namespace proxyforge {

// One benchmark row: a meta-question with its pre-annotated proxy pairs.
// File format is JSONL with rows
//   {id, domain, text, pairs:[{question, reference, index}]}
struct BenchmarkItem {
    MetaQuestion meta;
    ProxySet proxies;
};

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path);
void save_benchmark(const std::vector<BenchmarkItem>& items, const std::filesystem::path& path);

/// Converter scaffold for external benchmark releases. Field mapping:
/// question id -> id, topic/category -> domain, the long-form question
/// text -> text, each annotated proxy item -> {question, reference
/// ("True"/"False"/"NotMentioned"), index}. Rows already in that shape pass
/// through unchanged; anything else needs a caller-provided mapping first.
BenchmarkItem convert_benchmark_record(const ordered_json& row);

/// Stable digest over item ids and pair content; reports from different
/// benchmarks refuse to compare.
std::string benchmark_id(const std::vector<BenchmarkItem>& items);

struct EvalOptions {
    std::string generator_model = "gpt-4o-mini";
    std::string judge_model = "gpt-4o";
    double temperature = 0.0;  // evaluation default; exploration uses its own
    int max_tokens = 2048;
    int max_in_flight = 8;
};

struct EvalEntry {
    std::string meta_id;
    std::string domain;
    double score = 0.0;
    int questions = 0;
};

struct EvalReport {
    std::string benchmark_id;
    std::vector<EvalEntry> per_meta;
    double overall_pct = 0.0;  // mean of per-meta scores, in percent
    std::map<std::string, double> per_domain_pct;
    int evaluated = 0;
    int failed = 0;  // metas excluded from the mean
};

ordered_json to_record(const EvalReport& report);
EvalReport eval_report_from_record(const ordered_json& j);

/// One generation per meta-question, each scored with score_accuracy
/// against the pre-annotated pairs. Failed metas are excluded from the
/// mean and counted. All judge transcripts are returned for audit.
EvalReport evaluate(const std::vector<BenchmarkItem>& benchmark, Gateway& gateway,
                    const EvalOptions& options, std::vector<JudgeTranscript>* transcripts);

struct DeltaEntry {
    std::string meta_id;
    double score_a = 0.0;
    double score_b = 0.0;
    double delta = 0.0;
};

struct DeltaReport {
    std::string benchmark_id;
    double overall_a = 0.0;
    double overall_b = 0.0;
    double delta = 0.0;
    double relative_gain_pct = 0.0;  // (b - a) / a * 100
    std::vector<DeltaEntry> per_meta;
};

ordered_json to_record(const DeltaReport& report);

/// Per-meta and overall deltas between two runs over the same benchmark.
/// Throws InvalidInput on a benchmark id mismatch.
DeltaReport compare_reports(const EvalReport& a, const EvalReport& b);

}  // namespace proxyforge
