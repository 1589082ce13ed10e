#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "racoon/kgstore.hpp"
#include "racoon/linking.hpp"
#include "racoon/tabular.hpp"

namespace racoon {

/// When linking is considered to have failed for a column.
enum class FallbackPolicy {
    all_failed, ///< vanilla prompt only when no selected cell links
    any_failed, ///< vanilla prompt as soon as one selected cell fails to link
};

inline std::string_view to_string(FallbackPolicy p) {
    return p == FallbackPolicy::all_failed ? "all_failed" : "any_failed";
}

inline FallbackPolicy parse_fallback_policy(std::string_view s) {
    if (s == "all_failed" || s == "all-failed") return FallbackPolicy::all_failed;
    if (s == "any_failed" || s == "any-failed") return FallbackPolicy::any_failed;
    throw ConfigError("unknown fallback policy '" + std::string(s) + "'");
}

struct CellKnowledge {
    std::size_t row = 0;
    std::size_t col = 0;
    EntityId entity;
    std::string label;
    /// Outgoing triples of `entity`; every subject equals `entity`.
    std::vector<Triple> neighborhood;
};

struct RetrievalResult {
    ColumnQuery query;
    std::size_t selected_cells = 0;
    std::vector<Cell> cells{};
    std::vector<LinkOutcome> outcomes{};
    std::vector<CellKnowledge> knowledge{};
    /// Labels of neighborhood objects reached through the type relation.
    std::map<EntityId, std::string> object_labels{};
    bool fallback = true;
};

struct RetrieveOptions {
    FallbackPolicy fallback_policy = FallbackPolicy::all_failed;
    /// Relation whose objects get their labels resolved during retrieval.
    std::string instance_of = "P31";
};

/// Every non-empty cell of the query column, in row order.
inline std::vector<Cell> select_cells(const ColumnQuery& query) {
    const Table& table = query.table();
    std::vector<Cell> cells;
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        const Cell& cell = table.cell(r, query.target_col());
        if (!cell.text.empty()) cells.push_back(cell);
    }
    return cells;
}

/// Selects and links the column's cells, then fetches each linked entity's
/// label and one-hop neighborhood plus the labels of its type objects.
inline RetrievalResult retrieve(const ColumnQuery& query, const Linker& linker, const KnowledgeGraph& kg,
                                const RetrieveOptions& options = {}) {
    RetrievalResult result{.query = query};
    result.cells = select_cells(query);
    result.selected_cells = result.cells.size();
    if (result.cells.empty()) return result;

    const std::string ctx =
        "table '" + query.table().table_id + "' column " + std::to_string(query.target_col()) + ": ";
    try {
        result.outcomes = link_cells(linker, result.cells);

        std::vector<EntityId> linked;
        for (const auto& o : result.outcomes) {
            if (o.linked) linked.push_back(*o.linked);
        }
        kg.prefetch(linked);

        std::vector<EntityId> type_objects;
        for (const auto& o : result.outcomes) {
            if (!o.linked) continue;
            CellKnowledge k{o.row, o.col, *o.linked, kg.entity_label(*o.linked), kg.one_hop(*o.linked)};
            for (const auto& t : k.neighborhood) {
                if (t.relation == options.instance_of) type_objects.push_back(t.object);
            }
            result.knowledge.push_back(std::move(k));
        }
        kg.prefetch(type_objects);
        for (const auto& id : type_objects) {
            if (!result.object_labels.contains(id)) result.object_labels.emplace(id, kg.entity_label(id));
        }
    } catch (const TransportError& e) {
        throw TransportError(ctx + e.what(), e.retryable());
    } catch (const CacheMissError& e) {
        throw CacheMissError(ctx + e.what());
    } catch (const Error& e) {
        throw Error(ctx + e.what());
    }

    switch (options.fallback_policy) {
        case FallbackPolicy::all_failed: result.fallback = result.knowledge.empty(); break;
        case FallbackPolicy::any_failed: result.fallback = result.knowledge.size() < result.selected_cells; break;
    }
    return result;
}

} // namespace racoon
