#pragma once

#include <string>
#include <vector>

#include "proxyforge/gateway.hpp"
#include "proxyforge/types.hpp"

namespace proxyforge {

struct DomainSpec {
    std::string name;
    int target_count = 1;
};

/// The built-in 40-domain list (also shipped as data/domains_default.txt);
/// callers may substitute their own.
const std::vector<std::string>& default_domains();

struct SynthOptions {
    std::string model = "gpt-4o-mini";
    double temperature = 0.8;
    int max_tokens = 2048;
    int batch_size = 1;   // completions requested per generation call
    int batch_cap = 32;   // generation calls per domain before giving up
    int min_pairs = 15;
    double true_majority = 0.5;
    int retry_cap = 3;    // proxy-set regeneration attempts
};

/// Splits a completion into list items. Accepts lines starting with "N.",
/// "N)" or "-"; markdown emphasis is stripped.
std::vector<std::string> parse_enumerated_list(const std::string& text);

/// Extracts numbered Question:/Answer: blocks. Answer labels are matched
/// case-insensitively against {True, False, Not Mentioned}; blocks with any
/// other label are dropped. Indexes follow document order.
std::vector<ProxyPair> parse_proxy_block(const std::string& text);

/// Repeats generation batches, deduplicating by content id, until
/// target_count distinct questions are collected. Throws BatchCapExceeded
/// when the cap is hit first, ParseError when a batch yields no items.
std::vector<MetaQuestion> synthesize_meta_questions(const DomainSpec& domain, Gateway& gateway,
                                                    const SynthOptions& options);

/// Generates a proxy set for one meta-question, retrying on validation
/// failure up to retry_cap attempts. When every attempt is invalid the best
/// attempt is returned with flagged=true. Throws ParseError when no attempt
/// yields a single pair.
ProxySet synthesize_proxy_pairs(const MetaQuestion& meta, Gateway& gateway,
                                const SynthOptions& options);

ChatRequest meta_question_request(const DomainSpec& domain, const SynthOptions& options);
ChatRequest proxy_pair_request(const MetaQuestion& meta, const SynthOptions& options);

}  // namespace proxyforge
