#include "proxyforge/util.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "proxyforge/errors.hpp"

namespace proxyforge {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::Auth: return "AuthError";
        case ErrorKind::Transient: return "TransientError";
        case ErrorKind::ExhaustedRetries: return "ExhaustedRetries";
        case ErrorKind::MalformedResponse: return "MalformedResponse";
        case ErrorKind::ExhaustedScript: return "ExhaustedScript";
        case ErrorKind::BatchCapExceeded: return "BatchCapExceeded";
        case ErrorKind::Io: return "IoError";
    }
    return "UnknownError";
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw ProxyError(ErrorKind::Io, "sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out(len * 2, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = hex[digest[i] >> 4];
        out[2 * i + 1] = hex[digest[i] & 0xf];
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProxyError(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<ordered_json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ProxyError(ErrorKind::Io, "cannot open " + path.string());
    std::vector<ordered_json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(ordered_json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ProxyError(ErrorKind::ParseError,
                             path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ProxyError(ErrorKind::Io, "cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw ProxyError(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace proxyforge
