#include "proxyforge/gateway.hpp"

#include <atomic>
#include <fstream>
#include <thread>

namespace proxyforge {

void validate(const ChatRequest& request) {
    if (request.messages.empty()) {
        throw ProxyError(ErrorKind::InvalidInput, "request has no messages");
    }
    if (request.messages.back().role != "user") {
        throw ProxyError(ErrorKind::InvalidInput, "last message role must be user");
    }
    for (const auto& m : request.messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant") {
            throw ProxyError(ErrorKind::InvalidInput, "unknown message role: " + m.role);
        }
    }
    if (request.temperature < 0) throw ProxyError(ErrorKind::InvalidInput, "temperature < 0");
    if (request.n < 1) throw ProxyError(ErrorKind::InvalidInput, "n < 1");
    if (request.max_tokens < 1) throw ProxyError(ErrorKind::InvalidInput, "max_tokens < 1");
}

std::string request_fingerprint(const ChatRequest& request) {
    std::string preimage = request.model;
    preimage += '\n';
    preimage += std::to_string(request.n);
    preimage += '\n';
    for (const auto& m : request.messages) {
        preimage += m.role;
        preimage += '\x1f';
        preimage += m.content;
        preimage += '\x1e';
    }
    return sha256_hex(preimage);
}

void MockScript::add(const ChatRequest& request, ScriptReply reply) {
    const std::string fp = request_fingerprint(request);
    queues_[fp].push_back(reply);
    const auto [it, inserted] = entry_index_.try_emplace(fp, entries_.size());
    if (inserted) {
        entries_.push_back(Entry{request, {std::move(reply)}});
    } else {
        entries_[it->second].replies.push_back(std::move(reply));
    }
}

void MockScript::add_choices(const ChatRequest& request, std::vector<std::string> choices) {
    add(request, ScriptReply{std::move(choices), ""});
}

void MockScript::add_error(const ChatRequest& request, const std::string& error) {
    add(request, ScriptReply{{}, error});
}

MockScript MockScript::load(const std::filesystem::path& path) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ProxyError(ErrorKind::ParseError, "mock script " + path.string() + ": " + e.what());
    }
    MockScript script;
    for (const auto& entry : doc.at("entries")) {
        ChatRequest req;
        req.model = entry.at("model").get<std::string>();
        req.n = entry.at("n").get<int>();
        for (const auto& m : entry.at("messages")) {
            req.messages.push_back(ChatMessage{m.at("role").get<std::string>(),
                                               m.at("content").get<std::string>()});
        }
        for (const auto& reply : entry.at("replies")) {
            ScriptReply r;
            if (reply.contains("error")) {
                r.error = reply.at("error").get<std::string>();
            } else {
                for (const auto& c : reply.at("choices")) r.choices.push_back(c.get<std::string>());
            }
            script.add(req, std::move(r));
        }
    }
    return script;
}

void MockScript::save(const std::filesystem::path& path) const {
    ordered_json entries = ordered_json::array();
    for (const auto& e : entries_) {
        ordered_json messages = ordered_json::array();
        for (const auto& m : e.request.messages) {
            messages.push_back(ordered_json{{"role", m.role}, {"content", m.content}});
        }
        ordered_json replies = ordered_json::array();
        for (const auto& r : e.replies) {
            if (!r.error.empty()) {
                replies.push_back(ordered_json{{"error", r.error}});
            } else {
                replies.push_back(ordered_json{{"choices", r.choices}});
            }
        }
        entries.push_back(ordered_json{{"model", e.request.model},
                                       {"n", e.request.n},
                                       {"messages", messages},
                                       {"replies", replies}});
    }
    const ordered_json doc{{"entries", entries}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ProxyError(ErrorKind::Io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

MockBackend::MockBackend(MockScript script) : queues_(script.queues()) {}

ChatResponse MockBackend::complete(const ChatRequest& request) {
    ScriptReply reply;
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++calls_;
        ++in_flight_;
        if (in_flight_ > max_in_flight_) max_in_flight_ = in_flight_;
        const std::string fp = request_fingerprint(request);
        auto it = queues_.find(fp);
        if (it == queues_.end()) {
            --in_flight_;
            throw ProxyError(ErrorKind::MalformedResponse, "unscripted fingerprint " + fp);
        }
        if (it->second.empty()) {
            --in_flight_;
            throw ProxyError(ErrorKind::ExhaustedScript, "script exhausted for " + fp);
        }
        reply = it->second.front();
        it->second.pop_front();
    }
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    {
        std::lock_guard<std::mutex> lock(mu_);
        --in_flight_;
    }
    if (!reply.error.empty()) {
        const std::string& e = reply.error;
        if (e == "timeout" || e == "http_429" || e == "http_500" || e == "http_503") {
            throw ProxyError(ErrorKind::Transient, "scripted " + e);
        }
        if (e == "http_401" || e == "http_403") {
            throw ProxyError(ErrorKind::Auth, "scripted " + e);
        }
        throw ProxyError(ErrorKind::MalformedResponse, "scripted " + e);
    }
    ChatResponse response;
    response.request_tag = request.request_tag;
    response.choices = reply.choices;
    response.backend_tag = tag();
    return response;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)), rng_(options_.jitter_seed) {
    if (!options_.sleep_fn) {
        options_.sleep_fn = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

std::chrono::milliseconds Gateway::next_delay(int attempt) {
    double cap = options_.backoff_base_ms;
    for (int i = 1; i < attempt; ++i) cap *= options_.backoff_factor;
    double u;
    {
        std::lock_guard<std::mutex> lock(rng_mu_);
        u = uniform01(rng_);
    }
    return std::chrono::milliseconds(static_cast<long>(u * cap));  // full jitter
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    validate(request);
    const int cap = std::max(1, options_.retry_cap);
    std::string last_error;
    for (int attempt = 1; attempt <= cap; ++attempt) {
        try {
            ChatResponse response = backend_->complete(request);
            if (static_cast<int>(response.choices.size()) != request.n) {
                throw ProxyError(ErrorKind::MalformedResponse,
                                 "backend returned " + std::to_string(response.choices.size()) +
                                     " choices, requested " + std::to_string(request.n));
            }
            response.request_tag = request.request_tag;
            response.attempts = attempt;
            return response;
        } catch (const ProxyError& e) {
            if (e.kind() != ErrorKind::Transient) throw;
            last_error = e.what();
            if (attempt == cap) break;
            options_.sleep_fn(next_delay(attempt));
        }
    }
    throw ProxyError(ErrorKind::ExhaustedRetries,
                     "gave up after " + std::to_string(cap) + " attempts; last: " + last_error);
}

std::vector<Expected<ChatResponse>> Gateway::complete_many(
    const std::vector<ChatRequest>& requests, int max_in_flight) {
    if (max_in_flight < 1) throw ProxyError(ErrorKind::InvalidInput, "max_in_flight < 1");

    std::vector<Expected<ChatResponse>> results(requests.size(),
                                                Expected<ChatResponse>(ErrorInfo{}));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                results[i] = Expected<ChatResponse>(complete(requests[i]));
            } catch (const ProxyError& e) {
                results[i] = Expected<ChatResponse>(to_error_info(e));
            } catch (const std::exception& e) {
                results[i] =
                    Expected<ChatResponse>(ErrorInfo{ErrorKind::MalformedResponse, e.what()});
            }
        }
    };

    const std::size_t pool =
        std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), requests.size());
    if (pool <= 1) {
        worker();
        return results;
    }
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return results;
}

}  // namespace proxyforge
