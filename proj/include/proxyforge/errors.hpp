#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace proxyforge {

enum class ErrorKind {
    InvalidInput,
    InvalidConfig,
    ConfigError,
    ParseError,
    Auth,
    Transient,
    ExhaustedRetries,
    MalformedResponse,
    ExhaustedScript,
    BatchCapExceeded,
    Io,
};

const char* to_string(ErrorKind kind);

class ProxyError : public std::runtime_error {
public:
    ProxyError(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ErrorInfo {
    ErrorKind kind{};
    std::string message;
};

/// Value-or-error slot used for per-item outcomes in batch operations.
template <class T>
class Expected {
public:
    Expected(T value) : v_(std::move(value)) {}
    Expected(ErrorInfo error) : v_(std::move(error)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    const T& value() const& { return std::get<T>(v_); }
    T& value() & { return std::get<T>(v_); }
    const ErrorInfo& error() const { return std::get<ErrorInfo>(v_); }

private:
    std::variant<T, ErrorInfo> v_;
};

inline ErrorInfo to_error_info(const ProxyError& e) { return ErrorInfo{e.kind(), e.what()}; }

}  // namespace proxyforge
