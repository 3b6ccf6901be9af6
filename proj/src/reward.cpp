#include "proxyforge/reward.hpp"

#include <array>
#include <cctype>
#include <cstring>

#include "proxyforge/prompts.hpp"

namespace proxyforge {

namespace {

// Start position of the last "not <ws> mentioned" occurrence, or -1.
long last_not_mentioned(const std::string& lower) {
    long best = -1;
    std::size_t pos = 0;
    while ((pos = lower.find("mentioned", pos)) != std::string::npos) {
        long i = static_cast<long>(pos) - 1;
        while (i >= 0 && std::isspace(static_cast<unsigned char>(lower[i]))) --i;
        if (i >= 2 && lower.compare(i - 2, 3, "not") == 0 &&
            (i - 3 < 0 || !std::isalpha(static_cast<unsigned char>(lower[i - 3])))) {
            best = i - 2;
        }
        ++pos;
    }
    return best;
}

long last_occurrence(const std::string& lower, const std::string& needle) {
    const std::size_t pos = lower.rfind(needle);
    return pos == std::string::npos ? -1 : static_cast<long>(pos);
}

bool parse_int_after(const std::string& lower, std::size_t from, int& value) {
    std::size_t i = from;
    while (i < lower.size() && !std::isdigit(static_cast<unsigned char>(lower[i]))) {
        // A newline before any digit means the rating is not on this line.
        if (lower[i] == '\n') return false;
        ++i;
    }
    if (i >= lower.size()) return false;
    int v = 0;
    while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) {
        v = v * 10 + (lower[i] - '0');
        ++i;
    }
    value = v;
    return true;
}

}  // namespace

Verdict parse_verdict(const std::string& text) {
    const std::string lower = to_lower(text);
    const long pos_true = last_occurrence(lower, "true");
    const long pos_false = last_occurrence(lower, "false");
    const long pos_nm = last_not_mentioned(lower);
    Verdict best = Verdict::Unparsed;
    long best_pos = -1;
    if (pos_true > best_pos) {
        best_pos = pos_true;
        best = Verdict::True;
    }
    if (pos_false > best_pos) {
        best_pos = pos_false;
        best = Verdict::False;
    }
    if (pos_nm > best_pos) {
        best = Verdict::NotMentioned;
    }
    return best;
}

double score_accuracy(const std::vector<Verdict>& verdicts,
                      const std::vector<Verdict>& references) {
    if (verdicts.size() != references.size()) {
        throw ProxyError(ErrorKind::InvalidInput, "verdict/reference length mismatch");
    }
    if (verdicts.empty()) throw ProxyError(ErrorKind::InvalidInput, "empty verdict list");
    int correct = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i] != Verdict::Unparsed && verdicts[i] == references[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(verdicts.size());
}

double score_precision(const std::vector<Verdict>& verdicts,
                       const std::vector<Verdict>& references) {
    if (verdicts.size() != references.size()) {
        throw ProxyError(ErrorKind::InvalidInput, "verdict/reference length mismatch");
    }
    int predicted_true = 0;
    int correct_true = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i] == Verdict::True) {
            ++predicted_true;
            if (references[i] == Verdict::True) ++correct_true;
        }
    }
    if (predicted_true == 0) return 0.0;
    return static_cast<double>(correct_true) / static_cast<double>(predicted_true);
}

double apply_metric(Metric metric, const std::vector<Verdict>& verdicts,
                    const std::vector<Verdict>& references) {
    return metric == Metric::Accuracy ? score_accuracy(verdicts, references)
                                      : score_precision(verdicts, references);
}

ChatRequest judge_request(const std::string& response_text, const std::string& question,
                          const JudgeOptions& options) {
    ChatRequest req;
    req.model = options.model;
    req.messages = {{"user", render_judge_prompt(response_text, question)}};
    req.temperature = 0.0;
    req.n = 1;
    req.max_tokens = options.max_tokens;
    return req;
}

JudgeTranscript judge_one(const std::string& response_text, const std::string& question,
                          Gateway& gateway, const JudgeOptions& options) {
    if (trim(response_text).empty() || trim(question).empty()) {
        throw ProxyError(ErrorKind::InvalidInput, "judge_one requires nonempty document and question");
    }
    const ChatResponse response = gateway.complete(judge_request(response_text, question, options));
    JudgeTranscript t;
    t.raw = response.choices.front();
    t.parsed = parse_verdict(t.raw);
    return t;
}

namespace {

ScoreOutcome assemble_outcome(const Response& response, const ProxySet& proxy_set, Metric metric,
                              std::vector<JudgeTranscript> transcripts) {
    ScoreOutcome outcome;
    outcome.scored.response = response;
    outcome.scored.metric = metric;
    std::vector<Verdict> references;
    references.reserve(proxy_set.pairs.size());
    for (const auto& p : proxy_set.pairs) references.push_back(p.reference);
    for (auto& t : transcripts) outcome.scored.verdicts.push_back(t.parsed);
    outcome.scored.score = apply_metric(metric, outcome.scored.verdicts, references);
    outcome.transcripts = std::move(transcripts);
    return outcome;
}

}  // namespace

ScoreOutcome score_response(const Response& response, const ProxySet& proxy_set, Gateway& gateway,
                            Metric metric, const JudgeOptions& options) {
    if (response.meta_id != proxy_set.meta_id) {
        throw ProxyError(ErrorKind::InvalidInput, "proxy set " + proxy_set.meta_id +
                                                      " does not own response meta " +
                                                      response.meta_id);
    }
    if (proxy_set.pairs.empty()) {
        throw ProxyError(ErrorKind::InvalidInput, "empty proxy set for " + proxy_set.meta_id);
    }
    std::vector<ChatRequest> requests;
    requests.reserve(proxy_set.pairs.size());
    for (const auto& p : proxy_set.pairs) {
        auto req = judge_request(response.text, p.question, options);
        req.request_tag = "judge:" + response.meta_id + ":" +
                          std::to_string(response.sample_index) + ":" + std::to_string(p.index);
        requests.push_back(std::move(req));
    }
    const auto results = gateway.complete_many(requests, 4);
    std::vector<JudgeTranscript> transcripts;
    transcripts.reserve(results.size());
    for (std::size_t j = 0; j < results.size(); ++j) {
        JudgeTranscript t;
        t.meta_id = response.meta_id;
        t.sample_index = response.sample_index;
        t.question_index = static_cast<int>(j);
        if (results[j].ok()) {
            t.raw = results[j].value().choices.front();
            t.parsed = parse_verdict(t.raw);
        } else {
            t.error = results[j].error().message;  // raw stays "", parses to Unparsed
        }
        transcripts.push_back(std::move(t));
    }
    return assemble_outcome(response, proxy_set, metric, std::move(transcripts));
}

std::vector<Expected<ScoreOutcome>> score_responses(
    const std::vector<Response>& responses, const std::map<std::string, ProxySet>& proxy_sets,
    Gateway& gateway, Metric metric, const JudgeOptions& options, int max_in_flight) {
    // Flatten every (response, question) pair into one batch, then cut the
    // ordered results back per response.
    std::vector<ChatRequest> requests;
    std::vector<std::pair<std::size_t, std::size_t>> slice;  // [begin, end) per response
    std::vector<std::string> errors(responses.size());
    for (const auto& r : responses) {
        const auto it = proxy_sets.find(r.meta_id);
        const std::size_t begin = requests.size();
        if (it == proxy_sets.end()) {
            errors[slice.size()] = "no proxy set for meta " + r.meta_id;
            slice.emplace_back(begin, begin);
            continue;
        }
        for (const auto& p : it->second.pairs) {
            auto req = judge_request(r.text, p.question, options);
            req.request_tag = "judge:" + r.meta_id + ":" + std::to_string(r.sample_index) + ":" +
                              std::to_string(p.index);
            requests.push_back(std::move(req));
        }
        slice.emplace_back(begin, requests.size());
    }
    const auto results = gateway.complete_many(requests, max_in_flight);
    std::vector<Expected<ScoreOutcome>> out;
    out.reserve(responses.size());
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!errors[i].empty()) {
            out.emplace_back(ErrorInfo{ErrorKind::InvalidInput, errors[i]});
            continue;
        }
        const auto& r = responses[i];
        std::vector<JudgeTranscript> transcripts;
        for (std::size_t j = slice[i].first; j < slice[i].second; ++j) {
            JudgeTranscript t;
            t.meta_id = r.meta_id;
            t.sample_index = r.sample_index;
            t.question_index = static_cast<int>(j - slice[i].first);
            if (results[j].ok()) {
                t.raw = results[j].value().choices.front();
                t.parsed = parse_verdict(t.raw);
            } else {
                t.error = results[j].error().message;
            }
            transcripts.push_back(std::move(t));
        }
        out.emplace_back(
            assemble_outcome(r, proxy_sets.at(r.meta_id), metric, std::move(transcripts)));
    }
    return out;
}

double llm_judge_score(const std::string& meta_text, const std::string& response_text,
                       Gateway& gateway, const JudgeOptions& options) {
    if (trim(meta_text).empty() || trim(response_text).empty()) {
        throw ProxyError(ErrorKind::InvalidInput, "llm_judge_score requires nonempty inputs");
    }
    ChatRequest req;
    req.model = options.model;
    req.messages = {{"user", render_llm_judge_prompt(meta_text, response_text)}};
    req.temperature = 0.0;
    req.n = 1;
    req.max_tokens = options.max_tokens;
    const std::string raw = gateway.complete(req).choices.front();
    const std::string lower = to_lower(raw);

    static const std::array<const char*, 4> dimensions = {"accuracy", "coherence", "factuality",
                                                          "comprehensiveness"};
    double sum = 0.0;
    bool labeled = true;
    for (const char* dim : dimensions) {
        const std::size_t pos = lower.find(dim);
        int value = 0;
        if (pos == std::string::npos || !parse_int_after(lower, pos + std::strlen(dim), value) ||
            value < 1 || value > 10) {
            labeled = false;
            break;
        }
        sum += value;
    }
    if (labeled) return sum / 4.0;

    // Fallback: first four standalone 1-10 integers anywhere in the output.
    std::vector<int> found;
    for (std::size_t i = 0; i < lower.size() && found.size() < 4; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(lower[i]))) continue;
        if (i > 0 && (std::isdigit(static_cast<unsigned char>(lower[i - 1])) ||
                      std::isalpha(static_cast<unsigned char>(lower[i - 1])))) {
            continue;
        }
        std::size_t j = i;
        int v = 0;
        while (j < lower.size() && std::isdigit(static_cast<unsigned char>(lower[j]))) {
            v = v * 10 + (lower[j] - '0');
            ++j;
        }
        if (v >= 1 && v <= 10) found.push_back(v);
        i = j - 1;
    }
    if (found.size() < 4) {
        throw ProxyError(ErrorKind::ParseError, "fewer than four dimension scores in judge output");
    }
    double total = 0.0;
    for (int v : found) total += v;
    return total / 4.0;
}

}  // namespace proxyforge
