#pragma once

#include <algorithm>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/http.hpp"
#include "racoon/kgstore.hpp"

namespace racoon {

struct RemoteKgConfig {
    /// MediaWiki API endpoint, e.g. https://www.wikidata.org/w/api.php
    std::string api_url;
    std::string language = "en";
    std::string user_agent = "racoon-cta/1.0";
    std::chrono::seconds timeout{30};
    http::RetryPolicy retry;
    std::ptrdiff_t max_in_flight = 4;
    /// Response cache directory; empty disables on-disk caching.
    std::filesystem::path cache_dir;
    /// wbgetentities accepts at most 50 ids per call.
    std::size_t batch_size = 50;
};

/// KnowledgeGraph over a MediaWiki/Wikibase API: `wbsearchentities` for
/// search and `wbgetentities` (labels + claims) for labels and one-hop edges.
/// Only entity-valued claims become triples.
class RemoteKg final : public KnowledgeGraph {
public:
    explicit RemoteKg(RemoteKgConfig config, http::Sleeper sleeper = http::default_sleep)
        : config_(std::move(config)),
          endpoint_(http::split_url(config_.api_url)),
          limiter_(config_.max_in_flight),
          sleeper_(std::move(sleeper)) {
        if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
        if (config_.batch_size == 0) config_.batch_size = 1;
    }

    [[nodiscard]] std::string entity_label(const EntityId& id) const override {
        const auto rec = record(id);
        return rec.label ? *rec.label : id.str();
    }

    [[nodiscard]] std::vector<Triple> one_hop(const EntityId& id) const override { return record(id).edges; }

    [[nodiscard]] std::vector<SearchHit> search_entities(std::string_view mention, std::size_t limit) const override {
        detail::check_search_args(mention, limit);
        const std::string cache_arg = std::string(mention) + '\t' + std::to_string(limit) + '\t' + config_.language;
        std::string body;
        if (auto hit = cache_get("search", cache_arg)) {
            body = std::move(*hit);
        } else {
            body = get({{"action", "wbsearchentities"},
                        {"search", std::string(mention)},
                        {"language", config_.language},
                        {"uselang", config_.language},
                        {"type", "item"},
                        {"limit", std::to_string(limit)},
                        {"format", "json"}},
                       "search '" + std::string(mention) + "'");
            cache_put("search", cache_arg, body);
        }
        return parse_search(body, limit);
    }

    void prefetch(std::span<const EntityId> ids) const override {
        std::vector<EntityId> missing;
        {
            std::lock_guard lock(mutex_);
            for (const auto& id : ids) {
                if (!records_.contains(id) &&
                    std::find(missing.begin(), missing.end(), id) == missing.end()) {
                    missing.push_back(id);
                }
            }
        }
        std::vector<EntityId> to_fetch;
        for (auto& id : missing) {
            if (auto cached = cache_get("entity", id.str())) {
                store(id, parse_entity(id, nlohmann::json::parse(*cached)));
            } else {
                to_fetch.push_back(std::move(id));
            }
        }
        for (std::size_t start = 0; start < to_fetch.size(); start += config_.batch_size) {
            const auto end = std::min(to_fetch.size(), start + config_.batch_size);
            fetch_batch(std::span<const EntityId>(to_fetch).subspan(start, end - start));
        }
    }

    struct EntityRecord {
        std::optional<std::string> label;
        std::vector<Triple> edges;
    };

    /// Parses one entity object of a wbgetentities response.
    [[nodiscard]] EntityRecord parse_entity(const EntityId& id, const nlohmann::json& entity) const {
        EntityRecord rec;
        if (!entity.is_object() || entity.contains("missing")) return rec;
        if (const auto labels = entity.find("labels"); labels != entity.end() && labels->is_object()) {
            if (const auto l = labels->find(config_.language); l != labels->end() && l->contains("value")) {
                rec.label = l->at("value").get<std::string>();
            }
        }
        if (const auto claims = entity.find("claims"); claims != entity.end() && claims->is_object()) {
            for (const auto& [relation, statements] : claims->items()) {
                if (!statements.is_array()) continue;
                for (const auto& statement : statements) {
                    const auto* value = find_path(statement, {"mainsnak", "datavalue", "value"});
                    if (value == nullptr || !value->is_object()) continue;
                    const auto obj = value->find("id");
                    if (obj == value->end() || !obj->is_string() || obj->get<std::string>().empty()) continue;
                    rec.edges.push_back(Triple{id, relation, EntityId{obj->get<std::string>()}});
                }
            }
        }
        std::sort(rec.edges.begin(), rec.edges.end(), neighborhood_less);
        rec.edges.erase(std::unique(rec.edges.begin(), rec.edges.end()), rec.edges.end());
        return rec;
    }

private:
    static const nlohmann::json* find_path(const nlohmann::json& root, std::initializer_list<const char*> keys) {
        const nlohmann::json* cur = &root;
        for (const char* key : keys) {
            if (!cur->is_object()) return nullptr;
            const auto it = cur->find(key);
            if (it == cur->end()) return nullptr;
            cur = &*it;
        }
        return cur;
    }

    [[nodiscard]] static std::vector<SearchHit> parse_search(const std::string& body, std::size_t limit) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw TransportError(std::string("search: malformed response: ") + e.what(), false);
        }
        std::vector<SearchHit> hits;
        const auto results = doc.find("search");
        if (results == doc.end() || !results->is_array()) return hits;
        for (const auto& item : *results) {
            if (hits.size() >= limit) break;
            const auto id = item.find("id");
            if (id == item.end() || !id->is_string() || id->get<std::string>().empty()) continue;
            std::string label = id->get<std::string>();
            if (const auto l = item.find("label"); l != item.end() && l->is_string()) label = l->get<std::string>();
            hits.push_back(SearchHit{EntityId{id->get<std::string>()}, std::move(label)});
        }
        return hits;
    }

    [[nodiscard]] EntityRecord record(const EntityId& id) const {
        {
            std::lock_guard lock(mutex_);
            if (const auto it = records_.find(id); it != records_.end()) return it->second;
        }
        prefetch(std::span<const EntityId>(&id, 1));
        std::lock_guard lock(mutex_);
        return records_.at(id);
    }

    void fetch_batch(std::span<const EntityId> ids) const {
        std::string joined;
        for (const auto& id : ids) {
            if (!joined.empty()) joined.push_back('|');
            joined += id.str();
        }
        const std::string body = get({{"action", "wbgetentities"},
                                      {"ids", joined},
                                      {"props", "labels|claims"},
                                      {"languages", config_.language},
                                      {"format", "json"}},
                                     "entities " + joined);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw TransportError(std::string("entities: malformed response: ") + e.what(), false);
        }
        const auto entities = doc.find("entities");
        for (const auto& id : ids) {
            nlohmann::json entity = nlohmann::json::object({{"missing", ""}});
            if (entities != doc.end() && entities->is_object() && entities->contains(id.str())) {
                entity = entities->at(id.str());
            }
            cache_put("entity", id.str(), entity.dump());
            store(id, parse_entity(id, entity));
        }
    }

    void store(const EntityId& id, EntityRecord rec) const {
        std::lock_guard lock(mutex_);
        records_.insert_or_assign(id, std::move(rec));
    }

    [[nodiscard]] std::string get(const httplib::Params& params, const std::string& what) const {
        return http::with_retry(
            [&] {
                auto guard = limiter_.acquire();
                auto client = http::make_client(endpoint_.origin, config_.timeout);
                const httplib::Headers headers{{"User-Agent", config_.user_agent}, {"Accept", "application/json"}};
                return http::check_response(client->Get(endpoint_.path, params, headers), what);
            },
            config_.retry, sleeper_);
    }

    [[nodiscard]] std::optional<std::string> cache_get(std::string_view op, std::string_view arg) const {
        if (!cache_) return std::nullopt;
        return cache_->get(op, arg);
    }

    void cache_put(std::string_view op, std::string_view arg, std::string_view value) const {
        if (cache_) cache_->put(op, arg, value);
    }

    RemoteKgConfig config_;
    http::Endpoint endpoint_;
    mutable http::InFlightLimiter limiter_;
    http::Sleeper sleeper_;
    std::optional<http::DiskCache> cache_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<EntityId, EntityRecord> records_;
};

} // namespace racoon
