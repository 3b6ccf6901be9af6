#include "proxyforge/types.hpp"

#include <algorithm>
#include <map>

#include "proxyforge/errors.hpp"

namespace proxyforge {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::True: return "True";
        case Verdict::False: return "False";
        case Verdict::NotMentioned: return "NotMentioned";
        case Verdict::Unparsed: return "Unparsed";
    }
    return "Unparsed";
}

std::optional<Verdict> verdict_from_string(std::string_view s) {
    if (s == "True") return Verdict::True;
    if (s == "False") return Verdict::False;
    if (s == "NotMentioned") return Verdict::NotMentioned;
    if (s == "Unparsed") return Verdict::Unparsed;
    return std::nullopt;
}

std::string_view to_string(Metric m) {
    return m == Metric::Accuracy ? "accuracy" : "precision";
}

std::optional<Metric> metric_from_string(std::string_view s) {
    if (s == "accuracy") return Metric::Accuracy;
    if (s == "precision") return Metric::Precision;
    return std::nullopt;
}

std::string meta_question_id(const std::string& domain, const std::string& text) {
    const std::string trimmed = trim(text);
    if (trimmed.empty()) {
        throw ProxyError(ErrorKind::InvalidInput, "meta-question text is empty");
    }
    return sha256_hex(domain + "\n" + trimmed);
}

MetaQuestion make_meta_question(const std::string& domain, const std::string& text) {
    MetaQuestion m;
    m.text = trim(text);
    m.domain = domain;
    m.id = meta_question_id(domain, m.text);
    return m;
}

ValidationReport validate_proxy_set(const ProxySet& set, int min_pairs, double true_majority) {
    ValidationReport report;
    const int l = set.size();
    report.too_few_pairs = l < min_pairs;
    int true_count = 0;
    for (const auto& p : set.pairs) {
        if (p.reference == Verdict::True) ++true_count;
    }
    report.true_share = l > 0 ? static_cast<double>(true_count) / static_cast<double>(l) : 0.0;
    report.majority_ok = report.true_share >= true_majority;
    report.pass = !report.too_few_pairs && report.majority_ok;
    return report;
}

namespace {

Verdict require_verdict(const ordered_json& j, const char* key) {
    const auto v = verdict_from_string(j.at(key).get<std::string>());
    if (!v) throw ProxyError(ErrorKind::ParseError, std::string("bad verdict in field ") + key);
    return *v;
}

Metric require_metric(const ordered_json& j, const char* key) {
    const auto m = metric_from_string(j.at(key).get<std::string>());
    if (!m) throw ProxyError(ErrorKind::ParseError, std::string("bad metric in field ") + key);
    return *m;
}

}  // namespace

ordered_json to_record(const MetaQuestion& m) {
    return ordered_json{{"id", m.id}, {"domain", m.domain}, {"text", m.text}};
}

ordered_json to_record(const ProxyPair& p, const std::string& meta_id) {
    return ordered_json{{"meta_id", meta_id},
                        {"question", p.question},
                        {"reference", std::string(to_string(p.reference))},
                        {"index", p.index}};
}

ordered_json to_record(const ProxySet& s) {
    ordered_json pairs = ordered_json::array();
    for (const auto& p : s.pairs) {
        pairs.push_back(ordered_json{{"question", p.question},
                                     {"reference", std::string(to_string(p.reference))},
                                     {"index", p.index}});
    }
    return ordered_json{{"meta_id", s.meta_id}, {"flagged", s.flagged}, {"pairs", pairs}};
}

ordered_json to_record(const Response& r) {
    return ordered_json{{"meta_id", r.meta_id},
                        {"sample_index", r.sample_index},
                        {"text", r.text},
                        {"generator_tag", r.generator_tag},
                        {"temperature", r.temperature}};
}

ordered_json to_record(const ScoredResponse& s) {
    ordered_json verdicts = ordered_json::array();
    for (const auto v : s.verdicts) verdicts.push_back(std::string(to_string(v)));
    return ordered_json{{"response", to_record(s.response)},
                        {"verdicts", verdicts},
                        {"score", s.score},
                        {"metric", std::string(to_string(s.metric))}};
}

ordered_json to_record(const PreferencePair& p) {
    return ordered_json{{"meta_id", p.meta_id},
                        {"prompt", p.prompt},
                        {"chosen", to_record(p.chosen)},
                        {"rejected", to_record(p.rejected)},
                        {"score_chosen", p.score_chosen},
                        {"score_rejected", p.score_rejected},
                        {"iteration", p.iteration}};
}

MetaQuestion meta_question_from_record(const ordered_json& j) {
    MetaQuestion m;
    m.id = j.at("id").get<std::string>();
    m.domain = j.at("domain").get<std::string>();
    m.text = j.at("text").get<std::string>();
    return m;
}

ProxyPair proxy_pair_from_record(const ordered_json& j) {
    ProxyPair p;
    p.question = j.at("question").get<std::string>();
    p.reference = require_verdict(j, "reference");
    if (p.reference == Verdict::Unparsed) {
        throw ProxyError(ErrorKind::ParseError, "Unparsed is not a legal reference answer");
    }
    p.index = j.at("index").get<int>();
    return p;
}

ProxySet proxy_set_from_record(const ordered_json& j) {
    ProxySet s;
    s.meta_id = j.at("meta_id").get<std::string>();
    s.flagged = j.value("flagged", false);
    for (const auto& row : j.at("pairs")) s.pairs.push_back(proxy_pair_from_record(row));
    return s;
}

Response response_from_record(const ordered_json& j) {
    Response r;
    r.meta_id = j.at("meta_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<int>();
    r.text = j.at("text").get<std::string>();
    r.generator_tag = j.at("generator_tag").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    return r;
}

ScoredResponse scored_response_from_record(const ordered_json& j) {
    ScoredResponse s;
    s.response = response_from_record(j.at("response"));
    for (const auto& v : j.at("verdicts")) {
        const auto verdict = verdict_from_string(v.get<std::string>());
        if (!verdict) throw ProxyError(ErrorKind::ParseError, "bad verdict in scored record");
        s.verdicts.push_back(*verdict);
    }
    s.score = j.at("score").get<double>();
    s.metric = require_metric(j, "metric");
    return s;
}

PreferencePair preference_pair_from_record(const ordered_json& j) {
    PreferencePair p;
    p.meta_id = j.at("meta_id").get<std::string>();
    p.prompt = j.at("prompt").get<std::string>();
    p.chosen = response_from_record(j.at("chosen"));
    p.rejected = response_from_record(j.at("rejected"));
    p.score_chosen = j.at("score_chosen").get<double>();
    p.score_rejected = j.at("score_rejected").get<double>();
    p.iteration = j.at("iteration").get<int>();
    return p;
}

std::vector<ProxySet> group_proxy_rows(const std::vector<ordered_json>& rows) {
    std::vector<ProxySet> sets;
    std::map<std::string, std::size_t> by_meta;
    for (const auto& row : rows) {
        const auto meta_id = row.at("meta_id").get<std::string>();
        auto [it, inserted] = by_meta.try_emplace(meta_id, sets.size());
        if (inserted) {
            ProxySet s;
            s.meta_id = meta_id;
            sets.push_back(std::move(s));
        }
        sets[it->second].pairs.push_back(proxy_pair_from_record(row));
    }
    for (auto& s : sets) {
        std::sort(s.pairs.begin(), s.pairs.end(),
                  [](const ProxyPair& a, const ProxyPair& b) { return a.index < b.index; });
    }
    return sets;
}

}  // namespace proxyforge
