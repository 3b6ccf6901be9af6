#pragma once

#include <string>

#include "proxyforge/gateway.hpp"

namespace proxyforge {

struct HttpBackendOptions {
    std::string base_url;  // e.g. http://localhost:8000/v1
    std::string api_key;   // sent as bearer credential when nonempty
    int timeout_ms = 30000;
};

/// OpenAI-compatible chat-completions client:
/// POST {base}/chat/completions with {model, messages, temperature, n, max_tokens}.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    ChatResponse complete(const ChatRequest& request) override;
    std::string tag() const override { return "openai-http"; }

private:
    HttpBackendOptions options_;
    std::string host_;  // scheme://authority
    std::string path_prefix_;
};

}  // namespace proxyforge
