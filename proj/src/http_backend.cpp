#include "proxyforge/http_backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace proxyforge {

namespace {

// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_base_url(const std::string& base) {
    std::string url = base;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) {
        throw ProxyError(ErrorKind::InvalidConfig, "gateway base URL not configured");
    }
    std::tie(host_, path_prefix_) = split_base_url(options_.base_url);
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    ordered_json messages = ordered_json::array();
    for (const auto& m : request.messages) {
        messages.push_back(ordered_json{{"role", m.role}, {"content", m.content}});
    }
    const ordered_json body{{"model", request.model},
                            {"messages", messages},
                            {"temperature", request.temperature},
                            {"n", request.n},
                            {"max_tokens", request.max_tokens}};

    httplib::Client client(host_);
    client.set_connection_timeout(0, options_.timeout_ms * 1000L);
    client.set_read_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000L);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }

    const auto result = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                                    "application/json");
    if (!result) {
        throw ProxyError(ErrorKind::Transient,
                         "connection failure: " + httplib::to_string(result.error()));
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
        throw ProxyError(ErrorKind::Auth, "http " + std::to_string(status));
    }
    if (status == 429 || status >= 500) {
        throw ProxyError(ErrorKind::Transient, "http " + std::to_string(status));
    }
    if (status != 200) {
        throw ProxyError(ErrorKind::MalformedResponse,
                         "http " + std::to_string(status) + ": " + result->body);
    }

    ordered_json doc;
    try {
        doc = ordered_json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw ProxyError(ErrorKind::MalformedResponse, std::string("bad json body: ") + e.what());
    }
    if (!doc.contains("choices") || !doc["choices"].is_array()) {
        throw ProxyError(ErrorKind::MalformedResponse, "body lacks choices");
    }
    ChatResponse response;
    response.request_tag = request.request_tag;
    response.backend_tag = tag();
    for (const auto& choice : doc["choices"]) {
        if (choice.contains("message") && choice["message"].contains("content")) {
            response.choices.push_back(choice["message"]["content"].get<std::string>());
        } else if (choice.contains("text")) {
            response.choices.push_back(choice["text"].get<std::string>());
        } else {
            throw ProxyError(ErrorKind::MalformedResponse, "choice lacks content");
        }
    }
    return response;
}

}  // namespace proxyforge
