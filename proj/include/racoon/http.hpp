#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include <httplib.h>

#include "racoon/digest.hpp"
#include "racoon/error.hpp"

namespace racoon::http {

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_delay{250};
    std::chrono::milliseconds max_delay{8000};
    double backoff_multiplier = 2.0;
};

inline std::chrono::milliseconds backoff_delay(int attempt, const RetryPolicy& policy) {
    double ms = static_cast<double>(policy.initial_delay.count());
    for (int i = 1; i < attempt; ++i) ms *= policy.backoff_multiplier;
    ms = std::min(ms, static_cast<double>(policy.max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Runs `op`, retrying retryable TransportErrors with exponential backoff.
/// Once attempts are exhausted the last error is rethrown as non-retryable.
template <typename Op>
auto with_retry(Op&& op, const RetryPolicy& policy, const Sleeper& sleep = default_sleep) {
    for (int attempt = 1;; ++attempt) {
        try {
            return op();
        } catch (const TransportError& e) {
            if (!e.retryable()) throw;
            if (attempt >= policy.max_attempts) {
                throw TransportError(std::string(e.what()) + " (gave up after " + std::to_string(attempt) +
                                         " attempts)",
                                     false);
            }
            sleep(backoff_delay(attempt, policy));
        }
    }
}

/// Caps the number of requests in flight.
class InFlightLimiter {
public:
    explicit InFlightLimiter(std::ptrdiff_t max_in_flight) : slots_(std::max<std::ptrdiff_t>(1, max_in_flight)) {}

    class Guard {
    public:
        explicit Guard(InFlightLimiter& owner) : owner_(&owner) { owner_->slots_.acquire(); }
        ~Guard() { owner_->slots_.release(); }
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;

    private:
        InFlightLimiter* owner_;
    };

    [[nodiscard]] Guard acquire() { return Guard(*this); }

private:
    std::counting_semaphore<> slots_;
};

/// Spaces request starts at least `1 / per_second` apart. Zero disables.
class RateLimiter {
public:
    explicit RateLimiter(double per_second = 0.0) {
        if (per_second > 0.0) {
            interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(1.0 / per_second));
        }
    }

    void wait() {
        if (interval_.count() == 0) return;
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_);
            next_ = slot + interval_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::mutex mutex_;
    std::chrono::steady_clock::duration interval_{0};
    std::chrono::steady_clock::time_point next_{};
};

/// File-per-entry response cache keyed by (operation, argument).
class DiskCache {
public:
    explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    [[nodiscard]] std::optional<std::string> get(std::string_view op, std::string_view arg) const {
        std::ifstream in(entry_path(op, arg), std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }

    void put(std::string_view op, std::string_view arg, std::string_view value) const {
        const auto target = entry_path(op, arg);
        auto tmp = target;
        tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write cache entry '" + tmp.string() + "'");
            out.write(value.data(), static_cast<std::streamsize>(value.size()));
        }
        std::filesystem::rename(tmp, target);
    }

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    [[nodiscard]] std::filesystem::path entry_path(std::string_view op, std::string_view arg) const {
        std::string key(op);
        key.push_back('\0');
        key.append(arg);
        return dir_ / (sha256_hex(key) + ".json");
    }

    std::filesystem::path dir_;
};

/// "scheme://host[:port]" plus path of a configured URL.
struct Endpoint {
    std::string origin;
    std::string path;
};

inline Endpoint split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw ConfigError("URL without scheme: '" + std::string(url) + "'");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme in '" + std::string(url) + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

inline bool is_url(std::string_view s) { return s.starts_with("http://") || s.starts_with("https://"); }

inline bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

inline std::string check_response(const httplib::Result& res, std::string_view what) {
    if (!res) {
        throw TransportError(std::string(what) + ": " + httplib::to_string(res.error()), true);
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError(std::string(what) + ": HTTP " + std::to_string(res->status), retryable_status(res->status));
    }
    return res->body;
}

inline std::unique_ptr<httplib::Client> make_client(const std::string& origin, std::chrono::seconds timeout) {
    auto client = std::make_unique<httplib::Client>(origin);
    if (!client->is_valid()) throw ConfigError("cannot create HTTP client for '" + origin + "'");
    client->set_connection_timeout(timeout);
    client->set_read_timeout(timeout);
    client->set_write_timeout(timeout);
    client->set_follow_location(true);
    return client;
}

} // namespace racoon::http
