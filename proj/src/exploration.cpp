#include "proxyforge/exploration.hpp"

namespace proxyforge {

namespace {

std::vector<Response> to_responses(const MetaQuestion& meta, const ChatResponse& response,
                                   const ExploreOptions& options) {
    std::vector<Response> out;
    out.reserve(response.choices.size());
    for (std::size_t i = 0; i < response.choices.size(); ++i) {
        Response r;
        r.meta_id = meta.id;
        r.sample_index = static_cast<int>(i);
        r.text = response.choices[i];
        r.generator_tag = options.model;
        r.temperature = options.temperature;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

ChatRequest explore_request(const MetaQuestion& meta, const ExploreOptions& options) {
    ChatRequest req;
    req.model = options.model;
    if (!options.system_prompt.empty()) {
        req.messages.push_back({"system", options.system_prompt});
    }
    req.messages.push_back({"user", meta.text});
    req.temperature = options.temperature;
    req.n = options.k;
    req.max_tokens = options.max_tokens;
    req.request_tag = "explore:" + meta.id;
    return req;
}

std::vector<Response> explore(const MetaQuestion& meta, Gateway& gateway,
                              const ExploreOptions& options) {
    if (options.k < 2) {
        throw ProxyError(ErrorKind::InvalidConfig, "k must be >= 2, got " +
                                                       std::to_string(options.k));
    }
    return to_responses(meta, gateway.complete(explore_request(meta, options)), options);
}

std::vector<Expected<std::vector<Response>>> explore_many(const std::vector<MetaQuestion>& metas,
                                                          Gateway& gateway,
                                                          const ExploreOptions& options,
                                                          int max_in_flight) {
    if (options.k < 2) {
        throw ProxyError(ErrorKind::InvalidConfig, "k must be >= 2, got " +
                                                       std::to_string(options.k));
    }
    std::vector<ChatRequest> requests;
    requests.reserve(metas.size());
    for (const auto& m : metas) requests.push_back(explore_request(m, options));
    const auto raw = gateway.complete_many(requests, max_in_flight);
    std::vector<Expected<std::vector<Response>>> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].ok()) {
            out.emplace_back(to_responses(metas[i], raw[i].value(), options));
        } else {
            out.emplace_back(raw[i].error());
        }
    }
    return out;
}

}  // namespace proxyforge
