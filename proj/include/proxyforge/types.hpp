#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proxyforge/util.hpp"

namespace proxyforge {

// Judged answer states. Unparsed marks judge output matching no label and is
// never a valid reference answer.
enum class Verdict { True, False, NotMentioned, Unparsed };

std::string_view to_string(Verdict v);
std::optional<Verdict> verdict_from_string(std::string_view s);

enum class Metric { Accuracy, Precision };

std::string_view to_string(Metric m);
std::optional<Metric> metric_from_string(std::string_view s);

struct MetaQuestion {
    std::string id;
    std::string domain;
    std::string text;

    bool operator==(const MetaQuestion&) const = default;
};

/// Content id: lowercase hex SHA-256 over "domain\n" + trimmed text.
/// Stable across runs and platforms; throws InvalidInput on empty text.
std::string meta_question_id(const std::string& domain, const std::string& text);

/// Builds a MetaQuestion with trimmed text and its content id.
MetaQuestion make_meta_question(const std::string& domain, const std::string& text);

struct ProxyPair {
    std::string question;
    Verdict reference = Verdict::True;  // True | False | NotMentioned only
    int index = 0;

    bool operator==(const ProxyPair&) const = default;
};

struct ProxySet {
    std::string meta_id;
    std::vector<ProxyPair> pairs;
    bool flagged = false;  // set when generation never produced a valid set

    int size() const { return static_cast<int>(pairs.size()); }
    bool operator==(const ProxySet&) const = default;
};

struct ValidationReport {
    bool too_few_pairs = false;
    double true_share = 0.0;
    bool majority_ok = false;
    bool pass = false;
};

/// Checks pair count and the share of True references. Never throws on
/// content; malformed inputs simply fail the checks.
ValidationReport validate_proxy_set(const ProxySet& set, int min_pairs, double true_majority);

struct Response {
    std::string meta_id;
    int sample_index = 0;
    std::string text;
    std::string generator_tag;
    double temperature = 0.0;

    bool operator==(const Response&) const = default;
};

struct ScoredResponse {
    Response response;
    std::vector<Verdict> verdicts;  // aligned with the owning ProxySet's pairs
    double score = 0.0;
    Metric metric = Metric::Accuracy;

    bool operator==(const ScoredResponse&) const = default;
};

struct PreferencePair {
    std::string meta_id;
    std::string prompt;
    Response chosen;
    Response rejected;
    double score_chosen = 0.0;
    double score_rejected = 0.0;
    int iteration = 0;

    bool operator==(const PreferencePair&) const = default;
};

// Canonical JSON records. Key order is stable and documented:
//   meta-question row   {id, domain, text}
//   proxy pair row      {meta_id, question, reference, index}
//   proxy set object    {meta_id, flagged, pairs:[{question, reference, index}]}
//   response row        {meta_id, sample_index, text, generator_tag, temperature}
//   scored row          {response:{...}, verdicts, score, metric}
//   preference row      {meta_id, prompt, chosen:{...}, rejected:{...},
//                        score_chosen, score_rejected, iteration}

ordered_json to_record(const MetaQuestion& m);
ordered_json to_record(const ProxyPair& p, const std::string& meta_id);
ordered_json to_record(const ProxySet& s);
ordered_json to_record(const Response& r);
ordered_json to_record(const ScoredResponse& s);
ordered_json to_record(const PreferencePair& p);

MetaQuestion meta_question_from_record(const ordered_json& j);
ProxyPair proxy_pair_from_record(const ordered_json& j);
ProxySet proxy_set_from_record(const ordered_json& j);
Response response_from_record(const ordered_json& j);
ScoredResponse scored_response_from_record(const ordered_json& j);
PreferencePair preference_pair_from_record(const ordered_json& j);

/// Groups flat {meta_id, question, reference, index} rows into ProxySets,
/// preserving first-seen meta order and sorting each set by index.
std::vector<ProxySet> group_proxy_rows(const std::vector<ordered_json>& rows);

}  // namespace proxyforge
