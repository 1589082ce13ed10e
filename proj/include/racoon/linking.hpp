#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/error.hpp"
#include "racoon/kgstore.hpp"
#include "racoon/tabular.hpp"

namespace racoon {

enum class LinkerKind { ground_truth, label_match, remote };

inline std::string_view to_string(LinkerKind kind) {
    switch (kind) {
        case LinkerKind::ground_truth: return "ground-truth";
        case LinkerKind::label_match: return "label-match";
        case LinkerKind::remote: return "remote";
    }
    return "?";
}

inline LinkerKind parse_linker_kind(std::string_view s) {
    if (s == "ground-truth" || s == "ground_truth") return LinkerKind::ground_truth;
    if (s == "label-match" || s == "label_match") return LinkerKind::label_match;
    if (s == "remote") return LinkerKind::remote;
    throw ConfigError("unknown linker '" + std::string(s) + "'");
}

struct LinkOutcome {
    std::size_t row = 0;
    std::size_t col = 0;
    std::string mention;
    std::optional<EntityId> linked;

    friend bool operator==(const LinkOutcome&, const LinkOutcome&) = default;
};

/// Maps a cell mention to at most one referent entity.
class Linker {
public:
    virtual ~Linker() = default;
    [[nodiscard]] virtual LinkerKind kind() const noexcept = 0;
    [[nodiscard]] virtual std::optional<EntityId> link(const Cell& cell) const = 0;
};

/// Copies each cell's gold entity.
class GroundTruthLinker final : public Linker {
public:
    [[nodiscard]] LinkerKind kind() const noexcept override { return LinkerKind::ground_truth; }
    [[nodiscard]] std::optional<EntityId> link(const Cell& cell) const override {
        if (!cell.gold_entity) return std::nullopt;
        return EntityId{*cell.gold_entity};
    }
};

/// Links iff the normalized mention equals a normalized label or alias in the
/// local snapshot; the first in search order wins among several.
class LabelMatchLinker final : public Linker {
public:
    explicit LabelMatchLinker(const LocalKg& kg) : kg_(&kg) {}
    [[nodiscard]] LinkerKind kind() const noexcept override { return LinkerKind::label_match; }
    [[nodiscard]] std::optional<EntityId> link(const Cell& cell) const override {
        auto matches = kg_->exact_matches(cell.text);
        if (matches.empty()) return std::nullopt;
        return std::move(matches.front());
    }

private:
    const LocalKg* kg_;
};

/// Takes the top candidate of a search backend (a Wikibase search API, or any
/// external linker service exposing the same contract).
class SearchLinker final : public Linker {
public:
    explicit SearchLinker(const KnowledgeGraph& backend) : backend_(&backend) {}
    [[nodiscard]] LinkerKind kind() const noexcept override { return LinkerKind::remote; }
    [[nodiscard]] std::optional<EntityId> link(const Cell& cell) const override {
        auto hits = backend_->search_entities(cell.text, 1);
        if (hits.empty()) return std::nullopt;
        return std::move(hits.front().id);
    }

private:
    const KnowledgeGraph* backend_;
};

/// Which linker to build and what it runs against.
struct LinkerSpec {
    LinkerKind kind = LinkerKind::ground_truth;
    /// Required for label_match; must be a LocalKg.
    const KnowledgeGraph* kg = nullptr;
    /// Search backend for the remote kind; falls back to `kg` when null.
    const KnowledgeGraph* search_backend = nullptr;
};

/// Builds the linker, validating it against the dataset it will run on.
inline std::unique_ptr<Linker> make_linker(const LinkerSpec& spec, std::span<const Table> dataset) {
    switch (spec.kind) {
        case LinkerKind::ground_truth: {
            bool any_gold = false;
            for (const auto& t : dataset) any_gold = any_gold || t.has_gold_links();
            if (!any_gold) throw ConfigError("ground-truth linker requires gold_entity fields, but the dataset has none");
            return std::make_unique<GroundTruthLinker>();
        }
        case LinkerKind::label_match: {
            const auto* local = dynamic_cast<const LocalKg*>(spec.kg);
            if (local == nullptr) throw ConfigError("label-match linker requires a local KG snapshot");
            return std::make_unique<LabelMatchLinker>(*local);
        }
        case LinkerKind::remote: {
            const KnowledgeGraph* backend = spec.search_backend != nullptr ? spec.search_backend : spec.kg;
            if (backend == nullptr) throw ConfigError("remote linker requires a search backend");
            return std::make_unique<SearchLinker>(*backend);
        }
    }
    throw ConfigError("unknown linker kind");
}

/// One outcome per cell, in input order. Cells must have non-empty text.
inline std::vector<LinkOutcome> link_cells(const Linker& linker, std::span<const Cell> cells) {
    if (cells.empty()) throw UsageError("link_cells: no cells to link");
    std::vector<LinkOutcome> outcomes;
    outcomes.reserve(cells.size());
    for (const auto& cell : cells) {
        if (cell.text.empty()) {
            throw UsageError("link_cells: empty-text cell at (" + std::to_string(cell.row) + ", " +
                             std::to_string(cell.col) + ")");
        }
        outcomes.push_back(LinkOutcome{cell.row, cell.col, cell.text, linker.link(cell)});
    }
    return outcomes;
}

/// Fraction of gold-linked cells whose outcome equals the gold entity;
/// nullopt when no cell carries a gold link.
inline std::optional<double> linking_accuracy(std::span<const LinkOutcome> outcomes, std::span<const Cell> cells) {
    if (outcomes.size() != cells.size()) {
        throw UsageError("linking_accuracy: " + std::to_string(outcomes.size()) + " outcomes for " +
                         std::to_string(cells.size()) + " cells");
    }
    std::size_t gold = 0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (outcomes[i].row != cells[i].row || outcomes[i].col != cells[i].col) {
            throw UsageError("linking_accuracy: outcome " + std::to_string(i) + " is not aligned with its cell");
        }
        if (!cells[i].gold_entity) continue;
        ++gold;
        if (outcomes[i].linked && outcomes[i].linked->str() == *cells[i].gold_entity) ++hit;
    }
    if (gold == 0) return std::nullopt;
    return static_cast<double>(hit) / static_cast<double>(gold);
}

/// One JSON line per outcome: table_id, row, col, mention, linked, gold.
inline void write_link_report(std::ostream& out, const std::string& table_id, std::span<const LinkOutcome> outcomes,
                              std::span<const Cell> cells) {
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        nlohmann::ordered_json line;
        line["table_id"] = table_id;
        line["row"] = o.row;
        line["col"] = o.col;
        line["mention"] = o.mention;
        line["linked"] = o.linked ? nlohmann::ordered_json(o.linked->str()) : nlohmann::ordered_json(nullptr);
        const auto& gold = i < cells.size() ? cells[i].gold_entity : std::nullopt;
        line["gold"] = gold ? nlohmann::ordered_json(*gold) : nlohmann::ordered_json(nullptr);
        out << line.dump() << '\n';
    }
}

} // namespace racoon
