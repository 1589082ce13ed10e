#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/augmentor.hpp"
#include "racoon/digest.hpp"
#include "racoon/error.hpp"

namespace racoon {

struct CompletionRequest {
    Prompt prompt;
    double temperature = 0.0;
    std::string model;
};

/// A completion backend. `complete` may be called concurrently.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    [[nodiscard]] virtual std::string complete(const CompletionRequest& request) const = 0;
};

/// Stable key of a prompt: SHA-256 over system, NUL, user.
inline std::string prompt_hash(const Prompt& prompt) {
    std::string data = prompt.system;
    data.push_back('\0');
    data += prompt.user;
    return sha256_hex(data);
}

/// prompt_hash -> recorded response, stored as JSONL {prompt_hash, response}.
class ReplayCache {
public:
    static ReplayCache load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open replay cache '" + path.string() + "'");
        ReplayCache cache;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string where = path.string() + ":" + std::to_string(line_no);
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
                cache.insert(rec.at("prompt_hash").get<std::string>(), rec.at("response").get<std::string>());
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(where + ": " + e.what());
            } catch (const ParseError& e) {
                throw ParseError(where + ": " + e.what());
            }
        }
        return cache;
    }

    void insert(const std::string& hash, const std::string& response) {
        auto [it, inserted] = entries_.try_emplace(hash, response);
        if (!inserted && it->second != response) {
            throw ParseError("conflicting responses for prompt hash " + hash);
        }
    }

    [[nodiscard]] const std::string* find(const std::string& hash) const {
        const auto it = entries_.find(hash);
        return it == entries_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

    /// Writes entries in hash order.
    void write(std::ostream& out) const {
        for (const auto& [hash, response] : entries_) {
            nlohmann::ordered_json rec;
            rec["prompt_hash"] = hash;
            rec["response"] = response;
            out << rec.dump() << '\n';
        }
    }

private:
    std::map<std::string, std::string> entries_;
};

class ReplayBackend final : public LlmBackend {
public:
    explicit ReplayBackend(ReplayCache cache) : cache_(std::move(cache)) {}

    [[nodiscard]] std::string complete(const CompletionRequest& request) const override {
        const auto key = prompt_hash(request.prompt);
        const auto* hit = cache_.find(key);
        if (hit == nullptr) throw CacheMissError("replay cache has no response for prompt hash " + key);
        return *hit;
    }

private:
    ReplayCache cache_;
};

/// First display label of the KG-Context sentence in a user message, or
/// nullopt for vanilla prompts.
inline std::optional<std::string> first_context_label(std::string_view user) {
    const auto step = user.find(templates::step_context);
    if (step == std::string_view::npos) return std::nullopt;
    auto rest = user.substr(step + templates::step_context.size());
    const auto lead = rest.find("wikidata entities: ");
    if (lead == std::string_view::npos) return std::nullopt;
    rest = rest.substr(lead + std::string_view("wikidata entities: ").size());
    rest = rest.substr(0, rest.find('\n'));
    // The label ends at the first " (<digits> cell" marker.
    for (std::size_t pos = rest.find(" ("); pos != std::string_view::npos; pos = rest.find(" (", pos + 1)) {
        std::size_t i = pos + 2;
        const std::size_t digits_start = i;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
        if (i > digits_start && rest.substr(i).starts_with(" cell")) return std::string(rest.substr(0, pos));
    }
    return std::nullopt;
}

/// Deterministic stand-in for a model.
class MockBackend final : public LlmBackend {
public:
    using Rule = std::function<std::string(const Prompt&)>;

    explicit MockBackend(Rule rule) : rule_(std::move(rule)) {}

    /// Default rule: map the first KG-Context label through `lookup`;
    /// vanilla prompts and unmapped labels answer `fallback`.
    static MockBackend from_lookup(std::map<std::string, std::string> lookup, std::vector<std::string> fallback) {
        return MockBackend([lookup = std::move(lookup), fallback = std::move(fallback)](const Prompt& prompt) {
            nlohmann::ordered_json answer;
            answer["type"] = fallback;
            if (const auto label = first_context_label(prompt.user)) {
                if (const auto it = lookup.find(*label); it != lookup.end()) {
                    answer["type"] = std::vector<std::string>{it->second};
                }
            }
            return answer.dump();
        });
    }

    /// Lookup file: {"lookup": {"<context label>": "<type>", ...}, "default": ["<type>", ...]}
    static MockBackend from_lookup_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open mock lookup '" + path.string() + "'");
        try {
            const auto doc = nlohmann::json::parse(in);
            auto lookup = doc.at("lookup").get<std::map<std::string, std::string>>();
            std::vector<std::string> fallback;
            if (doc.contains("default")) fallback = doc.at("default").get<std::vector<std::string>>();
            return from_lookup(std::move(lookup), std::move(fallback));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }

    [[nodiscard]] std::string complete(const CompletionRequest& request) const override { return rule_(request.prompt); }

private:
    Rule rule_;
};

struct Prediction {
    std::vector<std::string> labels;
    std::string raw;
    bool parse_ok = false;
};

namespace detail {

/// End (exclusive) of the balanced {...} region opening at `start`, honoring
/// JSON string escapes; npos when unbalanced.
inline std::size_t balanced_object_end(std::string_view s, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

} // namespace detail

/// Reads {"type": [...]} from a model response. Never throws: failures give
/// parse_ok = false. Labels outside the vocabulary are kept as-is so that the
/// metric counts them as false positives.
inline Prediction parse_prediction(std::string_view raw, const LabelVocabulary& vocab, PromptMode mode) noexcept {
    (void)vocab;
    Prediction pred;
    try {
        pred.raw = std::string(raw);
        for (std::size_t start = raw.find('{'); start != std::string_view::npos; start = raw.find('{', start + 1)) {
            const auto end = detail::balanced_object_end(raw, start);
            if (end == std::string_view::npos) continue;
            const auto doc = nlohmann::json::parse(raw.substr(start, end - start), nullptr, false);
            if (doc.is_discarded() || !doc.is_object() || !doc.contains("type")) continue;

            const auto& type = doc.at("type");
            std::vector<std::string> labels;
            if (type.is_string()) {
                labels.push_back(type.get<std::string>());
            } else if (type.is_array() &&
                       std::all_of(type.begin(), type.end(), [](const auto& v) { return v.is_string(); })) {
                for (const auto& v : type) labels.push_back(v.template get<std::string>());
            } else {
                return pred;
            }
            if (mode == PromptMode::single_label && labels.size() > 1) labels.resize(1);
            pred.labels = std::move(labels);
            pred.parse_ok = true;
            return pred;
        }
    } catch (...) {
        pred.labels.clear();
        pred.parse_ok = false;
    }
    return pred;
}

} // namespace racoon
