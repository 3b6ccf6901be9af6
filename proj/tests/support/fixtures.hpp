#pragma once

// Shared fixture helpers: scripted backends and temp directories.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "proxyforge/gateway.hpp"
#include "proxyforge/types.hpp"

namespace proxyforge::testing {

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("proxyforge_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline ChatRequest simple_request(const std::string& model, const std::string& content, int n = 1) {
    ChatRequest req;
    req.model = model;
    req.messages = {{"user", content}};
    req.n = n;
    return req;
}

inline Verdict random_verdict(std::mt19937_64& rng, bool allow_unparsed) {
    const int upper = allow_unparsed ? 4 : 3;
    switch (rng() % upper) {
        case 0: return Verdict::True;
        case 1: return Verdict::False;
        case 2: return Verdict::NotMentioned;
        default: return Verdict::Unparsed;
    }
}

}  // namespace proxyforge::testing
