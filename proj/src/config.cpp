#include "proxyforge/config.hpp"

#include <cstdlib>
#include <fstream>

#include "proxyforge/errors.hpp"

namespace proxyforge {

namespace {

// Every legal key with its built-in default. Model hyperparameter defaults
// follow the reference training setup: sampling at temperature 0.8 with a
// 2048-token cap, DPO at lr 5e-7 / batch 2 / accumulation 8 / 5 epochs.
const std::map<std::string, std::string>& known_keys() {
    static const std::map<std::string, std::string> keys = {
        {"gateway.max_in_flight", "8"},
        {"gateway.retry_cap", "5"},
        {"gateway.timeout_ms", "30000"},
        {"gateway.backoff_base_ms", "500"},
        {"gateway.base_url", ""},
        {"gateway.api_key", ""},
        {"model.generator", "gpt-4o-mini"},
        {"model.judge", "gpt-4o-mini"},
        {"model.synthesizer", "gpt-4o-mini"},
        {"model.evaluator", "gpt-4o"},
        {"sampling.k", "8"},
        {"sampling.temperature", "0.8"},
        {"sampling.max_tokens", "2048"},
        {"synth.min_pairs", "15"},
        {"synth.true_majority", "0.5"},
        {"synth.retry_cap", "3"},
        {"synth.batch_cap", "32"},
        {"synth.batch_size", "1"},
        {"selection.margin", "0"},
        {"selection.budget", "-1"},
        {"dpo.beta", "0.1"},
        {"dpo.learning_rate", "5e-7"},
        {"dpo.epochs", "5"},
        {"dpo.batch_size", "2"},
        {"dpo.grad_accum", "8"},
        {"loop.iterations", "2"},
        {"loop.k", "8"},
        {"loop.metric", "accuracy"},
        {"loop.margin", "0"},
        {"loop.budget", "-1"},
        {"loop.partition", "random"},
        {"loop.models", ""},
        {"trainer.mode", "export"},
        {"eval.temperature", "0"},
        {"toy.facts", "8"},
        {"toy.init_logit", "-1"},
        {"toy.lr", "0.5"},
        {"toy.metas_per_iteration", "64"},
        {"run.seed", "0"},
    };
    return keys;
}

}  // namespace

Config Config::defaults() {
    Config c;
    c.values_ = known_keys();
    return c;
}

void Config::require_known(const std::string& key, const std::string& context) const {
    if (known_keys().count(key) == 0) {
        throw ProxyError(ErrorKind::ConfigError, "unknown key \"" + key + "\"" + context);
    }
}

void Config::apply_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ProxyError(ErrorKind::ConfigError, "cannot open config file " + path.string());
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string at = " at " + path.string() + ":" + std::to_string(lineno);
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']' || stripped.size() < 3) {
                throw ProxyError(ErrorKind::ConfigError, "malformed section header" + at);
            }
            section = trim(stripped.substr(1, stripped.size() - 2));
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ProxyError(ErrorKind::ConfigError, "expected key = value" + at);
        }
        const std::string name = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (name.empty()) throw ProxyError(ErrorKind::ConfigError, "empty key" + at);
        const std::string key = section.empty() ? name : section + "." + name;
        require_known(key, at);
        values_[key] = value;
    }
}

void Config::apply_env() {
    if (const char* v = std::getenv("PROXYFORGE_API_KEY")) values_["gateway.api_key"] = v;
    if (const char* v = std::getenv("PROXYFORGE_BASE_URL")) values_["gateway.base_url"] = v;
}

void Config::set(const std::string& key, const std::string& value) {
    require_known(key, "");
    values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ProxyError(ErrorKind::ConfigError, "unknown key \"" + key + "\"");
    }
    return it->second;
}

int Config::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const int out = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ProxyError(ErrorKind::ConfigError, "key \"" + key + "\" is not an integer: " + v);
    }
}

std::uint64_t Config::get_seed(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const unsigned long long out = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ProxyError(ErrorKind::ConfigError, "key \"" + key + "\" is not a seed: " + v);
    }
}

double Config::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ProxyError(ErrorKind::ConfigError, "key \"" + key + "\" is not a number: " + v);
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string v = to_lower(get_string(key));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ProxyError(ErrorKind::ConfigError, "key \"" + key + "\" is not a boolean: " + v);
}

ordered_json Config::snapshot() const {
    ordered_json j = ordered_json::object();
    for (const auto& [key, value] : values_) {
        if (key == "gateway.api_key" && !value.empty()) {
            j[key] = "<redacted>";
            continue;
        }
        j[key] = value;
    }
    return j;
}

Config load_config(const std::optional<std::filesystem::path>& path) {
    Config c = Config::defaults();
    if (path) c.apply_file(*path);
    c.apply_env();
    return c;
}

}  // namespace proxyforge
