#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace proxyforge {

using ordered_json = nlohmann::ordered_json;

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a whole file's bytes. Throws ProxyError(Io) if unreadable.
std::string file_sha256(const std::filesystem::path& path);

std::string iso8601_utc_now();

/// One JSON object per line, UTF-8, newline-terminated.
std::vector<ordered_json> read_jsonl(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);
std::string read_file(const std::filesystem::path& path);

/// Uniform double in [0,1) from the top 53 bits of one engine draw.
/// Portable across standard library implementations, unlike the
/// std distributions.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates with explicit rejection sampling; same sequence on every
/// platform for a given seed.
template <class T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / bound * bound;
        std::uint64_t draw = rng();
        while (draw >= limit) draw = rng();
        std::swap(items[i - 1], items[draw % bound]);
    }
}

}  // namespace proxyforge
