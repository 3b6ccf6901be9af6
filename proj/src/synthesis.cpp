#include "proxyforge/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "proxyforge/prompts.hpp"

namespace proxyforge {

namespace {

std::string strip_emphasis(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c != '*') out.push_back(c);
    }
    return trim(out);
}

bool is_item_line(std::string_view line, std::size_t& content_start) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i < line.size() && line[i] == '-') {
        content_start = i + 1;
        return true;
    }
    std::size_t digits = 0;
    while (i + digits < line.size() && std::isdigit(static_cast<unsigned char>(line[i + digits]))) {
        ++digits;
    }
    if (digits == 0 || i + digits >= line.size()) return false;
    const char punct = line[i + digits];
    if (punct != '.' && punct != ')') return false;
    content_start = i + digits + 1;
    return true;
}

// Case-insensitive marker scan: `word` at a word boundary, followed by ':'
// with optional emphasis/space between. Returns marker start positions and
// the positions just past each colon.
struct Marker {
    std::size_t start;
    std::size_t content;
};

std::vector<Marker> find_markers(const std::string& lower, const std::string& word) {
    std::vector<Marker> out;
    std::size_t pos = 0;
    while ((pos = lower.find(word, pos)) != std::string::npos) {
        const bool boundary =
            pos == 0 || (!std::isalnum(static_cast<unsigned char>(lower[pos - 1])) &&
                         lower[pos - 1] != '-' && lower[pos - 1] != '_');
        std::size_t j = pos + word.size();
        while (j < lower.size() && (lower[j] == '*' || lower[j] == ' ')) ++j;
        if (boundary && j < lower.size() && lower[j] == ':') {
            out.push_back(Marker{pos, j + 1});
            pos = j + 1;
        } else {
            ++pos;
        }
    }
    return out;
}

// Reads a reference label from the start of `s` (quotes and emphasis
// skipped). Only the three legal labels parse; anything else is rejected.
std::optional<Verdict> parse_reference_label(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && !std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    std::string rest = to_lower(s.substr(i));
    auto boundary_at = [&](std::size_t n) {
        return n >= rest.size() || !std::isalpha(static_cast<unsigned char>(rest[n]));
    };
    if (rest.rfind("true", 0) == 0 && boundary_at(4)) return Verdict::True;
    if (rest.rfind("false", 0) == 0 && boundary_at(5)) return Verdict::False;
    if (rest.rfind("not", 0) == 0) {
        std::size_t j = 3;
        while (j < rest.size() && std::isspace(static_cast<unsigned char>(rest[j]))) ++j;
        if (rest.compare(j, 9, "mentioned") == 0 && boundary_at(j + 9)) {
            return Verdict::NotMentioned;
        }
    }
    return std::nullopt;
}

}  // namespace

const std::vector<std::string>& default_domains() {
    static const std::vector<std::string> domains = {
        "Computer Science", "Technology",     "History",          "Game",
        "Policy",           "Mathematics",    "Physics",          "Chemistry",
        "Biology",          "Medicine",       "Economics",        "Finance",
        "Law",              "Philosophy",     "Psychology",       "Sociology",
        "Education",        "Linguistics",    "Literature",       "Music",
        "Film",             "Architecture",   "Engineering",      "Astronomy",
        "Geography",        "Geology",        "Environment",      "Agriculture",
        "Transportation",   "Energy",         "Cybersecurity",    "Artificial Intelligence",
        "Statistics",       "Business",       "Marketing",        "Sports",
        "Nutrition",        "Anthropology",   "Political Science", "Art",
    };
    return domains;
}

std::vector<std::string> parse_enumerated_list(const std::string& text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string_view line(text.data() + start, end - start);
        std::size_t content = 0;
        if (is_item_line(line, content)) {
            std::string item = strip_emphasis(line.substr(content));
            if (!item.empty()) items.push_back(std::move(item));
        }
        if (end == text.size()) break;
        start = end + 1;
    }
    return items;
}

std::vector<ProxyPair> parse_proxy_block(const std::string& text) {
    const std::string lower = to_lower(text);
    const auto questions = find_markers(lower, "question");
    std::vector<ProxyPair> pairs;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const std::size_t block_begin = questions[i].content;
        const std::size_t block_end =
            i + 1 < questions.size() ? questions[i + 1].start : text.size();
        const std::string block_lower = lower.substr(block_begin, block_end - block_begin);
        const auto answers = find_markers(block_lower, "answer");
        if (answers.empty()) continue;
        const std::size_t answer_start = block_begin + answers.front().start;
        const std::size_t answer_content = block_begin + answers.front().content;
        std::string question =
            strip_emphasis(std::string_view(text).substr(block_begin, answer_start - block_begin));
        if (question.empty()) continue;
        const auto reference = parse_reference_label(
            std::string_view(text).substr(answer_content, block_end - answer_content));
        if (!reference) continue;
        ProxyPair p;
        p.question = std::move(question);
        p.reference = *reference;
        p.index = static_cast<int>(pairs.size());
        pairs.push_back(std::move(p));
    }
    return pairs;
}

ChatRequest meta_question_request(const DomainSpec& domain, const SynthOptions& options) {
    ChatRequest req;
    req.model = options.model;
    req.messages = {{"user", render_meta_question_prompt(domain.name)}};
    req.temperature = options.temperature;
    req.n = options.batch_size;
    req.max_tokens = options.max_tokens;
    req.request_tag = "synth-meta:" + domain.name;
    return req;
}

ChatRequest proxy_pair_request(const MetaQuestion& meta, const SynthOptions& options) {
    ChatRequest req;
    req.model = options.model;
    req.messages = {{"user", render_proxy_pair_prompt(meta.text)}};
    req.temperature = options.temperature;
    req.n = 1;
    req.max_tokens = options.max_tokens;
    req.request_tag = "synth-proxy:" + meta.id;
    return req;
}

std::vector<MetaQuestion> synthesize_meta_questions(const DomainSpec& domain, Gateway& gateway,
                                                    const SynthOptions& options) {
    if (domain.target_count < 1) {
        throw ProxyError(ErrorKind::InvalidInput, "target_count < 1 for domain " + domain.name);
    }
    std::vector<MetaQuestion> collected;
    std::unordered_set<std::string> seen;
    for (int batch = 0; batch < options.batch_cap; ++batch) {
        const ChatResponse response = gateway.complete(meta_question_request(domain, options));
        for (const auto& choice : response.choices) {
            const auto items = parse_enumerated_list(choice);
            if (items.empty()) {
                throw ProxyError(ErrorKind::ParseError,
                                 "no enumerable items in completion for domain " + domain.name);
            }
            for (const auto& item : items) {
                MetaQuestion m = make_meta_question(domain.name, item);
                if (seen.insert(m.id).second) {
                    collected.push_back(std::move(m));
                    if (static_cast<int>(collected.size()) == domain.target_count) {
                        return collected;
                    }
                }
            }
        }
    }
    throw ProxyError(ErrorKind::BatchCapExceeded,
                     "domain " + domain.name + ": " + std::to_string(collected.size()) + "/" +
                         std::to_string(domain.target_count) + " questions after " +
                         std::to_string(options.batch_cap) + " batches");
}

ProxySet synthesize_proxy_pairs(const MetaQuestion& meta, Gateway& gateway,
                                const SynthOptions& options) {
    ProxySet best;
    int best_rank = -1;
    double best_share = -1.0;
    for (int attempt = 0; attempt < std::max(1, options.retry_cap); ++attempt) {
        const ChatResponse response = gateway.complete(proxy_pair_request(meta, options));
        auto pairs = parse_proxy_block(response.choices.front());
        if (pairs.empty()) continue;
        ProxySet set;
        set.meta_id = meta.id;
        set.pairs = std::move(pairs);
        const ValidationReport report =
            validate_proxy_set(set, options.min_pairs, options.true_majority);
        if (report.pass) return set;
        const int rank = (report.too_few_pairs ? 0 : 1) + (report.majority_ok ? 1 : 0);
        if (rank > best_rank || (rank == best_rank && set.size() > best.size()) ||
            (rank == best_rank && set.size() == best.size() && report.true_share > best_share)) {
            best = std::move(set);
            best_rank = rank;
            best_share = report.true_share;
        }
    }
    if (best.pairs.empty()) {
        throw ProxyError(ErrorKind::ParseError,
                         "no parseable proxy pairs for meta " + meta.id + " after " +
                             std::to_string(options.retry_cap) + " attempts");
    }
    best.flagged = true;
    return best;
}

}  // namespace proxyforge
