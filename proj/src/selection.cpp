#include "proxyforge/selection.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "proxyforge/errors.hpp"

namespace proxyforge {

MetaScoreStats response_stats(const std::vector<ScoredResponse>& scored) {
    if (scored.empty()) throw ProxyError(ErrorKind::InvalidInput, "no scored responses");
    MetaScoreStats stats;
    stats.meta_id = scored.front().response.meta_id;
    stats.n = static_cast<int>(scored.size());
    double sum = 0.0;
    for (const auto& s : scored) {
        if (s.response.meta_id != stats.meta_id) {
            throw ProxyError(ErrorKind::InvalidInput, "mixed meta ids in response_stats");
        }
        sum += s.score;
    }
    stats.mean = sum / stats.n;
    double sq = 0.0;
    for (const auto& s : scored) {
        const double d = s.score - stats.mean;
        sq += d * d;
    }
    stats.variance = sq / stats.n;
    return stats;
}

std::vector<std::string> prioritize(std::vector<MetaScoreStats> stats, int budget) {
    std::sort(stats.begin(), stats.end(), [](const MetaScoreStats& a, const MetaScoreStats& b) {
        if (a.variance != b.variance) return a.variance > b.variance;
        return a.meta_id < b.meta_id;
    });
    std::vector<std::string> out;
    const std::size_t limit =
        budget < 0 ? stats.size() : std::min(stats.size(), static_cast<std::size_t>(budget));
    out.reserve(limit);
    for (std::size_t i = 0; i < limit; ++i) out.push_back(stats[i].meta_id);
    return out;
}

std::optional<PreferencePair> build_pair(const std::vector<ScoredResponse>& scored,
                                         const std::string& prompt, double margin, int iteration) {
    if (scored.size() < 2) {
        throw ProxyError(ErrorKind::InvalidInput, "build_pair needs at least 2 scored responses");
    }
    if (margin < 0) throw ProxyError(ErrorKind::InvalidInput, "margin must be >= 0");
    const ScoredResponse* best = &scored.front();
    const ScoredResponse* worst = &scored.front();
    for (const auto& s : scored) {
        if (s.response.meta_id != scored.front().response.meta_id) {
            throw ProxyError(ErrorKind::InvalidInput, "mixed meta ids in build_pair");
        }
        if (s.score > best->score ||
            (s.score == best->score && s.response.sample_index < best->response.sample_index)) {
            best = &s;
        }
        if (s.score < worst->score ||
            (s.score == worst->score && s.response.sample_index < worst->response.sample_index)) {
            worst = &s;
        }
    }
    if (!(best->score > worst->score + margin)) return std::nullopt;
    PreferencePair pair;
    pair.meta_id = best->response.meta_id;
    pair.prompt = prompt;
    pair.chosen = best->response;
    pair.rejected = worst->response;
    pair.score_chosen = best->score;
    pair.score_rejected = worst->score;
    pair.iteration = iteration;
    return pair;
}

DistributionReport corpus_stats(const std::vector<ScoredResponse>& scored) {
    if (scored.empty()) throw ProxyError(ErrorKind::InvalidInput, "empty corpus");
    DistributionReport report;
    report.n_scores = static_cast<int>(scored.size());

    double sum = 0.0;
    std::map<std::string, std::pair<double, int>> per_meta;  // sum, count
    for (const auto& s : scored) {
        sum += s.score;
        auto& acc = per_meta[s.response.meta_id];
        acc.first += s.score;
        acc.second += 1;
    }
    const double mean = sum / report.n_scores;
    double sq = 0.0;
    for (const auto& s : scored) {
        const double d = s.score - mean;
        sq += d * d;
    }
    report.n_metas = static_cast<int>(per_meta.size());
    report.mean_pct = mean * 100.0;
    report.variance_pct = sq / report.n_scores * 100.0;

    bool first = true;
    for (const auto& [meta_id, acc] : per_meta) {
        const double meta_mean = acc.first / acc.second * 100.0;
        if (first || meta_mean > report.largest_mean_pct) report.largest_mean_pct = meta_mean;
        if (first || meta_mean < report.lowest_mean_pct) report.lowest_mean_pct = meta_mean;
        first = false;
    }
    return report;
}

ordered_json to_record(const DistributionReport& report) {
    return ordered_json{{"mean", report.mean_pct},
                        {"variance", report.variance_pct},
                        {"largest_mean", report.largest_mean_pct},
                        {"lowest_mean", report.lowest_mean_pct},
                        {"n_scores", report.n_scores},
                        {"n_metas", report.n_metas}};
}

std::string format_table(const DistributionReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%-14s %-10s %-14s %-12s\n"
                  "%-14.2f %-10.2f %-14.2f %-12.2f",
                  "Mean", "Variance", "Largest Mean", "Lowest Mean", report.mean_pct,
                  report.variance_pct, report.largest_mean_pct, report.lowest_mean_pct);
    return buf;
}

}  // namespace proxyforge
