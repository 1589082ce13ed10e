#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "racoon/retriever.hpp"

namespace racoon {

enum class ContextKind { none, entity_labels, entity_triplets };

inline std::string_view to_string(ContextKind kind) {
    switch (kind) {
        case ContextKind::none: return "none";
        case ContextKind::entity_labels: return "entity-labels";
        case ContextKind::entity_triplets: return "entity-triplets";
    }
    return "?";
}

inline ContextKind parse_context_kind(std::string_view s) {
    if (s == "none") return ContextKind::none;
    if (s == "entity-labels" || s == "entity_labels" || s == "etl") return ContextKind::entity_labels;
    if (s == "entity-triplets" || s == "entity_triplets" || s == "ett") return ContextKind::entity_triplets;
    throw ConfigError("unknown context kind '" + std::string(s) + "'");
}

struct ContextEntry {
    /// Entity the entry counts: the linked entity (labels) or the type object (triplets).
    EntityId entity;
    std::string display_label;
    std::size_t cell_count = 0;

    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

/// Column-level summary of retrieved knowledge. Entries are ordered by
/// cell_count descending, then display_label, then entity id.
struct ColumnContext {
    ContextKind kind = ContextKind::none;
    std::vector<ContextEntry> entries;

    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
};

namespace detail {

inline void order_entries(std::vector<ContextEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const ContextEntry& a, const ContextEntry& b) {
        if (a.cell_count != b.cell_count) return a.cell_count > b.cell_count;
        if (a.display_label != b.display_label) return a.display_label < b.display_label;
        return a.entity < b.entity;
    });
}

inline void require_not_fallback(const RetrievalResult& result, const char* op) {
    if (result.fallback) {
        throw UsageError(std::string(op) + ": retrieval fell back to the vanilla prompt; no context to build");
    }
}

} // namespace detail

/// One entry per distinct linked entity, counting the cells linked to it.
inline ColumnContext build_entity_labels(const RetrievalResult& result) {
    detail::require_not_fallback(result, "build_entity_labels");
    std::map<EntityId, ContextEntry> by_entity;
    for (const auto& k : result.knowledge) {
        auto [it, inserted] = by_entity.try_emplace(k.entity, ContextEntry{k.entity, k.label, 0});
        ++it->second.cell_count;
    }
    ColumnContext ctx{ContextKind::entity_labels, {}};
    for (auto& [_, entry] : by_entity) ctx.entries.push_back(std::move(entry));
    detail::order_entries(ctx.entries);
    return ctx;
}

/// One entry per distinct type reached through `instance_of_relation`,
/// counting the cells whose entity has that type. A cell with several types
/// counts once towards each.
inline ColumnContext build_entity_triplets(const RetrievalResult& result, std::string_view instance_of_relation) {
    detail::require_not_fallback(result, "build_entity_triplets");
    std::map<EntityId, std::size_t> counts;
    for (const auto& k : result.knowledge) {
        std::set<EntityId> types;
        for (const auto& t : k.neighborhood) {
            if (t.relation == instance_of_relation) types.insert(t.object);
        }
        for (const auto& type : types) ++counts[type];
    }
    ColumnContext ctx{ContextKind::entity_triplets, {}};
    for (const auto& [type, n] : counts) {
        const auto label = result.object_labels.find(type);
        ctx.entries.push_back(ContextEntry{type, label == result.object_labels.end() ? type.str() : label->second, n});
    }
    detail::order_entries(ctx.entries);
    return ctx;
}

/// Keeps the first `top_k` entries; 0 means no limit.
inline ColumnContext truncate_context(ColumnContext ctx, std::size_t top_k) {
    if (top_k > 0 && ctx.entries.size() > top_k) ctx.entries.erase(ctx.entries.begin() + static_cast<std::ptrdiff_t>(top_k), ctx.entries.end());
    return ctx;
}

inline ColumnContext build_context(const RetrievalResult& result, ContextKind kind, std::string_view instance_of_relation,
                                   std::size_t top_k) {
    switch (kind) {
        case ContextKind::entity_labels: return truncate_context(build_entity_labels(result), top_k);
        case ContextKind::entity_triplets:
            return truncate_context(build_entity_triplets(result, instance_of_relation), top_k);
        case ContextKind::none: break;
    }
    throw UsageError("build_context: kind 'none' has no context");
}

} // namespace racoon
