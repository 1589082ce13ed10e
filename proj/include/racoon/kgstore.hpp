#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "racoon/error.hpp"
#include "racoon/text.hpp"

namespace racoon {

/// Opaque KG entity identifier (Q-id, page id, ...). Never empty.
class EntityId {
public:
    explicit EntityId(std::string id) : id_(std::move(id)) {
        if (id_.empty()) throw UsageError("entity id must be non-empty");
    }

    [[nodiscard]] const std::string& str() const noexcept { return id_; }

    friend bool operator==(const EntityId&, const EntityId&) = default;
    friend std::strong_ordering operator<=>(const EntityId& a, const EntityId& b) { return a.id_.compare(b.id_) <=> 0; }

private:
    std::string id_;
};

struct Triple {
    EntityId subject;
    std::string relation;
    EntityId object;

    friend bool operator==(const Triple&, const Triple&) = default;
};

/// Canonical neighborhood order: relation, then object.
inline bool neighborhood_less(const Triple& a, const Triple& b) {
    if (a.relation != b.relation) return a.relation < b.relation;
    return a.object < b.object;
}

struct SearchHit {
    EntityId id;
    std::string label;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

} // namespace racoon

template <>
struct std::hash<racoon::EntityId> {
    std::size_t operator()(const racoon::EntityId& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};

namespace racoon {

/// Immutable in-memory KG subset.
struct KgSnapshot {
    std::unordered_map<EntityId, std::string> labels;
    std::unordered_map<EntityId, std::vector<std::string>> aliases;
    /// Subject -> outgoing triples, deduplicated and in neighborhood order.
    std::unordered_map<EntityId, std::vector<Triple>> out_edges;

    [[nodiscard]] std::size_t triple_count() const {
        std::size_t n = 0;
        for (const auto& [_, edges] : out_edges) n += edges.size();
        return n;
    }
};

/// Snapshot TSV:
///   L<TAB>id<TAB>label
///   A<TAB>id<TAB>alias
///   T<TAB>subject<TAB>relation<TAB>object
/// Lines starting with '#' and blank lines are ignored.
inline KgSnapshot parse_snapshot(std::istream& in) {
    KgSnapshot kg;
    std::unordered_map<EntityId, std::set<std::string>> alias_sets;
    std::string line;
    std::size_t line_no = 0;

    auto fail = [&](const std::string& why) {
        throw ParseError("line " + std::to_string(line_no) + ": " + why);
    };
    auto require_nonempty = [&](std::string_view field, const char* what) {
        if (field.empty()) fail(std::string("empty ") + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto view = text::strip_cr(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = text::split(view, '\t');
        const std::string_view tag = fields.front();
        if (tag == "L" || tag == "A") {
            if (fields.size() != 3) fail("expected 3 tab-separated fields for '" + std::string(tag) + "' line");
            require_nonempty(fields[1], "entity id");
            require_nonempty(fields[2], tag == "L" ? "label" : "alias");
            EntityId id{std::string(fields[1])};
            std::string value(fields[2]);
            if (tag == "L") {
                auto [it, inserted] = kg.labels.try_emplace(id, value);
                if (!inserted && it->second != value) {
                    fail("conflicting label for '" + id.str() + "': '" + it->second + "' vs '" + value + "'");
                }
            } else {
                alias_sets[id].insert(std::move(value));
            }
        } else if (tag == "T") {
            if (fields.size() != 4) fail("expected 4 tab-separated fields for 'T' line");
            require_nonempty(fields[1], "subject");
            require_nonempty(fields[2], "relation");
            require_nonempty(fields[3], "object");
            EntityId subject{std::string(fields[1])};
            kg.out_edges[subject].push_back(Triple{subject, std::string(fields[2]), EntityId{std::string(fields[3])}});
        } else {
            fail("unknown record tag '" + std::string(tag) + "'");
        }
    }

    for (auto& [_, edges] : kg.out_edges) {
        std::sort(edges.begin(), edges.end(), neighborhood_less);
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
    for (auto& [id, set] : alias_sets) {
        kg.aliases.emplace(id, std::vector<std::string>(set.begin(), set.end()));
    }
    return kg;
}

inline KgSnapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open KG snapshot '" + path.string() + "'");
    try {
        return parse_snapshot(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Read access to a knowledge graph. Implementations must be safe for
/// concurrent calls.
class KnowledgeGraph {
public:
    virtual ~KnowledgeGraph() = default;

    /// Label of `id`, or the raw id string when the KG has none.
    [[nodiscard]] virtual std::string entity_label(const EntityId& id) const = 0;

    /// All outgoing triples of `id`, sorted by relation then object.
    [[nodiscard]] virtual std::vector<Triple> one_hop(const EntityId& id) const = 0;

    /// Up to `limit` candidate entities for a textual mention, best first.
    [[nodiscard]] virtual std::vector<SearchHit> search_entities(std::string_view mention, std::size_t limit) const = 0;

    /// Hint that the given entities are about to be queried. Remote backends
    /// batch them into as few requests as possible.
    virtual void prefetch(std::span<const EntityId> ids) const { (void)ids; }
};

namespace detail {
/// Search tie-break order. Ids that share a non-numeric prefix followed by a
/// number compare numerically ("Q90" before "Q830"); anything else compares
/// byte-wise.
struct SearchOrder {
    static std::size_t digits_from(std::string_view s) {
        std::size_t i = s.size();
        while (i > 0 && s[i - 1] >= '0' && s[i - 1] <= '9') --i;
        return i;
    }

    bool operator()(const EntityId& a, const EntityId& b) const {
        const std::string_view x = a.str();
        const std::string_view y = b.str();
        const std::size_t px = digits_from(x);
        const std::size_t py = digits_from(y);
        const bool numeric = px < x.size() && py < y.size() && x.substr(0, px) == y.substr(0, py) &&
                             x[px] != '0' && y[py] != '0';
        if (numeric && x.size() != y.size()) return x.size() < y.size();
        return x < y;
    }
};

inline void check_search_args(std::string_view mention, std::size_t limit) {
    if (mention.empty()) throw UsageError("search_entities: mention must be non-empty");
    if (limit == 0) throw UsageError("search_entities: limit must be >= 1");
}
} // namespace detail

/// KnowledgeGraph backed by a loaded snapshot, with a normalized name index
/// over labels and aliases.
class LocalKg final : public KnowledgeGraph {
public:
    explicit LocalKg(KgSnapshot snapshot) : snapshot_(std::move(snapshot)) {
        for (const auto& [id, label] : snapshot_.labels) names_[text::normalize(label)].insert(id);
        for (const auto& [id, aliases] : snapshot_.aliases) {
            for (const auto& alias : aliases) names_[text::normalize(alias)].insert(id);
        }
    }

    [[nodiscard]] const KgSnapshot& snapshot() const noexcept { return snapshot_; }

    [[nodiscard]] std::string entity_label(const EntityId& id) const override {
        const auto it = snapshot_.labels.find(id);
        return it == snapshot_.labels.end() ? id.str() : it->second;
    }

    [[nodiscard]] std::vector<Triple> one_hop(const EntityId& id) const override {
        const auto it = snapshot_.out_edges.find(id);
        return it == snapshot_.out_edges.end() ? std::vector<Triple>{} : it->second;
    }

    /// Entities whose normalized label or alias equals the normalized mention,
    /// in search order.
    [[nodiscard]] std::vector<EntityId> exact_matches(std::string_view mention) const {
        const auto it = names_.find(text::normalize(mention));
        if (it == names_.end()) return {};
        return {it->second.begin(), it->second.end()};
    }

    /// Exact normalized matches first, then prefix matches; each group in
    /// search order (see detail::SearchOrder).
    [[nodiscard]] std::vector<SearchHit> search_entities(std::string_view mention, std::size_t limit) const override {
        detail::check_search_args(mention, limit);
        const std::string key = text::normalize(mention);
        if (key.empty()) return {};

        using IdSet = std::set<EntityId, detail::SearchOrder>;
        IdSet exact;
        IdSet prefix;
        for (auto it = names_.lower_bound(key); it != names_.end() && it->first.starts_with(key); ++it) {
            auto& bucket = it->first.size() == key.size() ? exact : prefix;
            bucket.insert(it->second.begin(), it->second.end());
        }

        std::vector<SearchHit> hits;
        auto emit = [&](const IdSet& ids, const IdSet* skip) {
            for (const auto& id : ids) {
                if (hits.size() >= limit) return;
                if (skip && skip->contains(id)) continue;
                hits.push_back(SearchHit{id, entity_label(id)});
            }
        };
        emit(exact, nullptr);
        emit(prefix, &exact);
        return hits;
    }

private:
    KgSnapshot snapshot_;
    std::map<std::string, std::set<EntityId, detail::SearchOrder>> names_;
};

} // namespace racoon
