#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxyforge/types.hpp"

namespace proxyforge {

struct MetaScoreStats {
    std::string meta_id;
    int n = 0;
    double mean = 0.0;
    double variance = 0.0;  // population variance
};

/// Mean and population variance of one meta-question's response scores.
/// Throws InvalidInput on an empty list or mixed meta ids.
MetaScoreStats response_stats(const std::vector<ScoredResponse>& scored);

/// Meta ids by variance descending, ties broken by id ascending, truncated
/// to budget. budget < 0 keeps everything.
std::vector<std::string> prioritize(std::vector<MetaScoreStats> stats, int budget);

/// Extremal preference pair for one meta-question: chosen = argmax score,
/// rejected = argmin score, ties broken by lowest sample_index. Emits
/// nothing unless score_chosen - score_rejected > margin; at most one pair
/// per meta-question per iteration.
std::optional<PreferencePair> build_pair(const std::vector<ScoredResponse>& scored,
                                         const std::string& prompt, double margin, int iteration);

// All figures in percent; variance is the [0,1]-score population variance
// scaled by 100 to match the reporting convention.
struct DistributionReport {
    double mean_pct = 0.0;
    double variance_pct = 0.0;
    double largest_mean_pct = 0.0;  // max over metas of the per-meta mean
    double lowest_mean_pct = 0.0;   // min over metas of the per-meta mean
    int n_scores = 0;
    int n_metas = 0;
};

DistributionReport corpus_stats(const std::vector<ScoredResponse>& scored);

ordered_json to_record(const DistributionReport& report);
std::string format_table(const DistributionReport& report);

}  // namespace proxyforge
