#pragma once

#include <chrono>
#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "racoon/http.hpp"
#include "racoon/llm.hpp"

namespace racoon {

struct LiveLlmConfig {
    /// Chat-completions URL, e.g. https://api.openai.com/v1/chat/completions
    std::string url = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    /// Environment variable holding the bearer token.
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
    http::RetryPolicy retry;
    std::ptrdiff_t max_in_flight = 4;
    /// Request-start ceiling; 0 disables.
    double requests_per_second = 0.0;
};

/// Chat-completion endpoint: POSTs {model, temperature, messages} and returns
/// choices[0].message.content.
class LiveBackend final : public LlmBackend {
public:
    explicit LiveBackend(LiveLlmConfig config, http::Sleeper sleeper = http::default_sleep)
        : config_(std::move(config)),
          endpoint_(http::split_url(config_.url)),
          limiter_(config_.max_in_flight),
          rate_(config_.requests_per_second),
          sleeper_(std::move(sleeper)) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("live LLM backend needs an API key in environment variable " + config_.api_key_env);
        }
        api_key_ = key;
    }

    [[nodiscard]] static nlohmann::json request_body(const CompletionRequest& request, const std::string& default_model) {
        if (request.temperature < 0.0) throw UsageError("temperature must be >= 0");
        return {{"model", request.model.empty() ? default_model : request.model},
                {"temperature", request.temperature},
                {"messages",
                 nlohmann::json::array({{{"role", "system"}, {"content", request.prompt.system}},
                                        {{"role", "user"}, {"content", request.prompt.user}}})}};
    }

    [[nodiscard]] static std::string response_content(const std::string& body) {
        try {
            const auto doc = nlohmann::json::parse(body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("chat completion: unexpected response shape: ") + e.what(), false);
        }
    }

    [[nodiscard]] std::string complete(const CompletionRequest& request) const override {
        const std::string payload = request_body(request, config_.model).dump();
        const std::string body = http::with_retry(
            [&] {
                auto guard = limiter_.acquire();
                rate_.wait();
                auto client = http::make_client(endpoint_.origin, config_.timeout);
                const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
                return http::check_response(client->Post(endpoint_.path, headers, payload, "application/json"),
                                            "chat completion");
            },
            config_.retry, sleeper_);
        return response_content(body);
    }

private:
    LiveLlmConfig config_;
    http::Endpoint endpoint_;
    std::string api_key_;
    mutable http::InFlightLimiter limiter_;
    mutable http::RateLimiter rate_;
    http::Sleeper sleeper_;
};

} // namespace racoon
