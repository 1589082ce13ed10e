#pragma once

#include <stdexcept>
#include <string>

namespace racoon {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or record.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or incomplete run configuration; raised before any backend call.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A call was made outside the operation's preconditions.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Network or remote-service failure. `retryable()` distinguishes transient
/// failures (timeouts, 429, 5xx) from permanent ones.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retryable)
        : Error(what), retryable_(retryable) {}

    [[nodiscard]] bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// Replay cache has no recorded response for a prompt.
class CacheMissError : public Error {
public:
    using Error::Error;
};

} // namespace racoon
