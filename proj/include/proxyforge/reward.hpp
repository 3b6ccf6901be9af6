#pragma once

#include <map>
#include <string>
#include <vector>

#include "proxyforge/gateway.hpp"
#include "proxyforge/types.hpp"

namespace proxyforge {

struct JudgeTranscript {
    std::string meta_id;
    int sample_index = -1;
    int question_index = -1;
    std::string raw;            // verbatim judge output ("" when the call failed)
    Verdict parsed = Verdict::Unparsed;
    std::string error;          // gateway failure note, normally empty
};

struct JudgeOptions {
    std::string model = "gpt-4o-mini";
    int max_tokens = 1024;
};

/// Total verdict parse: case-insensitive scan for "true", "false" and
/// "not mentioned"; the last occurrence wins (judges explain first and
/// answer last). No label anywhere maps to Unparsed.
Verdict parse_verdict(const std::string& text);

/// Fraction of positions where the judged verdict equals the reference.
/// Unparsed never equals anything. Throws InvalidInput on length mismatch.
double score_accuracy(const std::vector<Verdict>& verdicts,
                      const std::vector<Verdict>& references);

/// Among positions judged True, the fraction whose reference is True;
/// 0 when nothing was judged True.
double score_precision(const std::vector<Verdict>& verdicts,
                       const std::vector<Verdict>& references);

double apply_metric(Metric metric, const std::vector<Verdict>& verdicts,
                    const std::vector<Verdict>& references);

ChatRequest judge_request(const std::string& response_text, const std::string& question,
                          const JudgeOptions& options);

/// One judged question at temperature 0. Unparseable output is not an
/// error; the transcript simply carries Unparsed.
JudgeTranscript judge_one(const std::string& response_text, const std::string& question,
                          Gateway& gateway, const JudgeOptions& options);

struct ScoreOutcome {
    ScoredResponse scored;
    std::vector<JudgeTranscript> transcripts;  // one per proxy question
};

/// Judges every proxy question of one response. Judging failures record
/// Unparsed and scoring proceeds. Throws InvalidInput when the proxy set
/// belongs to a different meta-question.
ScoreOutcome score_response(const Response& response, const ProxySet& proxy_set, Gateway& gateway,
                            Metric metric, const JudgeOptions& options);

/// Batched scoring: all (response, question) judge calls fan out through
/// complete_many; verdicts are assembled by index, so completion order is
/// irrelevant. Responses lacking a proxy set get an error slot.
std::vector<Expected<ScoreOutcome>> score_responses(
    const std::vector<Response>& responses, const std::map<std::string, ProxySet>& proxy_sets,
    Gateway& gateway, Metric metric, const JudgeOptions& options, int max_in_flight);

/// Baseline scorer: mean of four 1-10 dimension ratings. Fewer than four
/// parseable scores is a ParseError.
double llm_judge_score(const std::string& meta_text, const std::string& response_text,
                       Gateway& gateway, const JudgeOptions& options);

}  // namespace proxyforge
