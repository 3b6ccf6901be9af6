#pragma once

#include <vector>

#include "proxyforge/gateway.hpp"
#include "proxyforge/types.hpp"

namespace proxyforge {

struct ExploreOptions {
    std::string model = "gpt-4o-mini";
    int k = 8;
    double temperature = 0.8;
    int max_tokens = 2048;
    std::string system_prompt;  // optional wrapper
};

ChatRequest explore_request(const MetaQuestion& meta, const ExploreOptions& options);

/// Samples k diverse responses for one meta-question in a single n=k call.
/// Throws InvalidConfig when k < 2 (a preference pair needs two candidates).
std::vector<Response> explore(const MetaQuestion& meta, Gateway& gateway,
                              const ExploreOptions& options);

/// Batched exploration through complete_many; per-meta failures are
/// reported positionally.
std::vector<Expected<std::vector<Response>>> explore_many(const std::vector<MetaQuestion>& metas,
                                                          Gateway& gateway,
                                                          const ExploreOptions& options,
                                                          int max_in_flight);

}  // namespace proxyforge
