#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "proxyforge/util.hpp"

namespace proxyforge {

// Layered run configuration: built-in defaults < config file < environment
// < CLI flags. The file format is flat sectioned key-value text:
//
//   # comment
//   [gateway]
//   max_in_flight = 8
//
// which resolves to the key "gateway.max_in_flight". Unknown keys are
// rejected with their file location.
class Config {
public:
    static Config defaults();

    void apply_file(const std::filesystem::path& path);
    /// PROXYFORGE_API_KEY -> gateway.api_key, PROXYFORGE_BASE_URL -> gateway.base_url.
    void apply_env();
    /// CLI-level override; throws ConfigError on unknown keys.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_seed(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Resolved key-value snapshot, echoed into every RunManifest.
    ordered_json snapshot() const;

private:
    void require_known(const std::string& key, const std::string& context) const;

    std::map<std::string, std::string> values_;
};

/// defaults + optional file + environment, in that order.
Config load_config(const std::optional<std::filesystem::path>& path);

}  // namespace proxyforge
