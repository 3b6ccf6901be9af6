#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "proxyforge/errors.hpp"
#include "proxyforge/util.hpp"

namespace proxyforge {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;  // nonempty, last role must be user
    double temperature = 0.0;
    int n = 1;  // number of samples
    int max_tokens = 2048;
    std::string request_tag;  // idempotency key
};

/// Throws InvalidInput when the request breaks its invariants.
void validate(const ChatRequest& request);

struct ChatResponse {
    std::string request_tag;
    std::vector<std::string> choices;  // length n on success
    std::string backend_tag;
    int attempts = 1;
};

/// Digest of model + n + messages. Deliberately excludes temperature and
/// request_tag so scripted replays key on semantic content.
std::string request_fingerprint(const ChatRequest& request);

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string tag() const = 0;
};

// One scripted reply: either n choices or a named failure
// (timeout | http_429 | http_500 | http_503 | http_401 | http_403 | malformed).
struct ScriptReply {
    std::vector<std::string> choices;
    std::string error;
};

/// Record/replay cassette: full requests plus their reply queues. Replies
/// for one fingerprint are consumed in recorded order.
class MockScript {
public:
    void add(const ChatRequest& request, ScriptReply reply);
    void add_choices(const ChatRequest& request, std::vector<std::string> choices);
    void add_error(const ChatRequest& request, const std::string& error);

    static MockScript load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const std::unordered_map<std::string, std::deque<ScriptReply>>& queues() const {
        return queues_;
    }

private:
    struct Entry {
        ChatRequest request;
        std::vector<ScriptReply> replies;
    };
    std::vector<Entry> entries_;  // insertion order, for save()
    std::unordered_map<std::string, std::size_t> entry_index_;
    std::unordered_map<std::string, std::deque<ScriptReply>> queues_;
};

class MockBackend : public Backend {
public:
    explicit MockBackend(MockScript script);

    ChatResponse complete(const ChatRequest& request) override;
    std::string tag() const override { return "mock"; }

    /// Artificial per-call latency; lets concurrency tests observe overlap.
    void set_delay(std::chrono::milliseconds delay) { delay_ = delay; }
    int max_in_flight_observed() const { return max_in_flight_; }
    int calls() const { return calls_; }

private:
    std::mutex mu_;
    std::unordered_map<std::string, std::deque<ScriptReply>> queues_;
    std::chrono::milliseconds delay_{0};
    int in_flight_ = 0;
    int max_in_flight_ = 0;
    int calls_ = 0;
};

struct GatewayOptions {
    int retry_cap = 5;
    int backoff_base_ms = 500;
    double backoff_factor = 2.0;
    int timeout_ms = 30000;
    std::uint64_t jitter_seed = 0;
    // Overridable so tests can observe delays without sleeping.
    std::function<void(std::chrono::milliseconds)> sleep_fn;
};

/// Single point of contact with completion backends. Transient failures
/// (timeouts, 429, 5xx) are retried with exponential backoff and full
/// jitter up to retry_cap attempts; auth and malformed responses surface
/// immediately.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

    ChatResponse complete(const ChatRequest& request);

    /// Responses in input order; at most max_in_flight requests outstanding.
    /// Per-item failures are reported positionally without aborting the batch.
    std::vector<Expected<ChatResponse>> complete_many(const std::vector<ChatRequest>& requests,
                                                      int max_in_flight);

private:
    std::chrono::milliseconds next_delay(int attempt);

    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    std::mutex rng_mu_;
    std::mt19937_64 rng_;
};

}  // namespace proxyforge
