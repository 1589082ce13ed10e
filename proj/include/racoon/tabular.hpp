#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/error.hpp"
#include "racoon/text.hpp"

namespace racoon {

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;
    std::string text;
    /// Gold referent entity; never an empty string when present.
    std::optional<std::string> gold_entity;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// A relational table with a dense, row-major cell grid and optional
/// per-column gold type sets.
struct Table {
    std::string table_id;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<Cell> cells;
    /// Column index -> non-empty set of gold types. Unlabeled columns are absent.
    std::map<std::size_t, std::set<std::string>> gold_labels;

    [[nodiscard]] const Cell& cell(std::size_t row, std::size_t col) const {
        return cells.at(row * n_cols + col);
    }

    [[nodiscard]] bool has_gold_links() const {
        for (const auto& c : cells) {
            if (c.gold_entity) return true;
        }
        return false;
    }

    friend bool operator==(const Table&, const Table&) = default;
};

/// One column of a table selected for annotation.
class ColumnQuery {
public:
    ColumnQuery(const Table& table, std::size_t target_col) : table_(&table), target_col_(target_col) {
        if (target_col >= table.n_cols) {
            throw UsageError("column " + std::to_string(target_col) + " out of range for table '" +
                             table.table_id + "' with " + std::to_string(table.n_cols) + " columns");
        }
    }

    [[nodiscard]] const Table& table() const noexcept { return *table_; }
    [[nodiscard]] std::size_t target_col() const noexcept { return target_col_; }

private:
    const Table* table_;
    std::size_t target_col_;
};

/// Ordered candidate type labels; order is what prompts render.
class LabelVocabulary {
public:
    LabelVocabulary() = default;

    explicit LabelVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
        std::unordered_set<std::string> seen;
        for (const auto& label : labels_) {
            if (label.empty()) throw ParseError("vocabulary contains an empty label");
            if (!seen.insert(label).second) throw ParseError("duplicate vocabulary label '" + label + "'");
        }
    }

    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] bool contains(std::string_view label) const {
        for (const auto& l : labels_) {
            if (l == label) return true;
        }
        return false;
    }

private:
    std::vector<std::string> labels_;
};

enum class DatasetFormat { jsonl };

namespace detail {

inline std::string record_context(const std::string& table_id, std::size_t line_no) {
    return "line " + std::to_string(line_no) + " (table_id '" + table_id + "')";
}

template <typename T>
T require_field(const nlohmann::json& obj, const char* field, const std::string& ctx) {
    if (!obj.is_object() || !obj.contains(field)) {
        throw ParseError(ctx + ": missing field '" + field + "'");
    }
    try {
        return obj.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(ctx + ": field '" + field + "' has the wrong type");
    }
}

inline Table parse_table_record(const nlohmann::json& rec, std::size_t line_no) {
    if (!rec.is_object()) {
        throw ParseError("line " + std::to_string(line_no) + ": record is not a JSON object");
    }
    Table table;
    table.table_id = require_field<std::string>(rec, "table_id", "line " + std::to_string(line_no));
    const std::string ctx = record_context(table.table_id, line_no);
    if (table.table_id.empty()) throw ParseError(ctx + ": field 'table_id' is empty");

    const auto n_rows = require_field<long long>(rec, "n_rows", ctx);
    const auto n_cols = require_field<long long>(rec, "n_cols", ctx);
    if (n_rows < 0) throw ParseError(ctx + ": field 'n_rows' is negative");
    if (n_cols < 0) throw ParseError(ctx + ": field 'n_cols' is negative");
    table.n_rows = static_cast<std::size_t>(n_rows);
    table.n_cols = static_cast<std::size_t>(n_cols);

    table.cells.resize(table.n_rows * table.n_cols);
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        for (std::size_t c = 0; c < table.n_cols; ++c) {
            auto& cell = table.cells[r * table.n_cols + c];
            cell.row = r;
            cell.col = c;
        }
    }

    if (!rec.contains("cells") || !rec.at("cells").is_array()) {
        throw ParseError(ctx + ": field 'cells' missing or not an array");
    }
    std::vector<bool> seen(table.cells.size(), false);
    std::size_t idx = 0;
    for (const auto& raw : rec.at("cells")) {
        const std::string cell_ctx = ctx + ", cells[" + std::to_string(idx++) + "]";
        const auto row = require_field<long long>(raw, "row", cell_ctx);
        const auto col = require_field<long long>(raw, "col", cell_ctx);
        if (row < 0 || static_cast<std::size_t>(row) >= table.n_rows) {
            throw ParseError(cell_ctx + ": field 'row' = " + std::to_string(row) + " outside n_rows");
        }
        if (col < 0 || static_cast<std::size_t>(col) >= table.n_cols) {
            throw ParseError(cell_ctx + ": field 'col' = " + std::to_string(col) + " outside n_cols");
        }
        const std::size_t slot = static_cast<std::size_t>(row) * table.n_cols + static_cast<std::size_t>(col);
        if (seen[slot]) throw ParseError(cell_ctx + ": duplicate cell record");
        seen[slot] = true;

        auto& cell = table.cells[slot];
        cell.text = require_field<std::string>(raw, "text", cell_ctx);
        if (raw.contains("gold_entity") && !raw.at("gold_entity").is_null()) {
            auto gold = require_field<std::string>(raw, "gold_entity", cell_ctx);
            if (gold.empty()) throw ParseError(cell_ctx + ": field 'gold_entity' is empty");
            cell.gold_entity = std::move(gold);
        }
    }

    if (rec.contains("gold_labels") && !rec.at("gold_labels").is_null()) {
        const auto& labels = rec.at("gold_labels");
        if (!labels.is_object()) throw ParseError(ctx + ": field 'gold_labels' is not an object");
        for (const auto& [key, value] : labels.items()) {
            const std::string label_ctx = ctx + ", gold_labels[\"" + key + "\"]";
            std::size_t col = 0;
            try {
                std::size_t consumed = 0;
                const long long parsed = std::stoll(key, &consumed);
                if (consumed != key.size() || parsed < 0) throw std::invalid_argument(key);
                col = static_cast<std::size_t>(parsed);
            } catch (const std::exception&) {
                throw ParseError(label_ctx + ": key is not a column index");
            }
            if (col >= table.n_cols) throw ParseError(label_ctx + ": column outside n_cols");
            if (!value.is_array()) throw ParseError(label_ctx + ": value is not an array");
            std::set<std::string> types;
            for (const auto& t : value) {
                if (!t.is_string() || t.get<std::string>().empty()) {
                    throw ParseError(label_ctx + ": labels must be non-empty strings");
                }
                types.insert(t.get<std::string>());
            }
            if (!types.empty()) table.gold_labels.emplace(col, std::move(types));
        }
    }
    return table;
}

} // namespace detail

/// Parses a JSON Lines dataset, one table per line. Blank lines are skipped.
inline std::vector<Table> parse_dataset(std::istream& in) {
    std::vector<Table> tables;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = text::strip_cr(line);
        if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(view);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        Table table = detail::parse_table_record(rec, line_no);
        if (!ids.insert(table.table_id).second) {
            throw ParseError(detail::record_context(table.table_id, line_no) + ": duplicate table_id");
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

inline std::vector<Table> load_dataset(const std::filesystem::path& path, DatasetFormat format = DatasetFormat::jsonl) {
    (void)format; // jsonl is the only format
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open dataset '" + path.string() + "'");
    try {
        return parse_dataset(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Writes tables in the dataset format. Cells with empty text and no gold
/// link are omitted; the loader restores them.
inline void write_dataset(const std::vector<Table>& tables, std::ostream& out) {
    for (const auto& table : tables) {
        nlohmann::ordered_json rec;
        rec["table_id"] = table.table_id;
        rec["n_rows"] = table.n_rows;
        rec["n_cols"] = table.n_cols;
        auto cells = nlohmann::ordered_json::array();
        for (const auto& cell : table.cells) {
            if (cell.text.empty() && !cell.gold_entity) continue;
            nlohmann::ordered_json c;
            c["row"] = cell.row;
            c["col"] = cell.col;
            c["text"] = cell.text;
            c["gold_entity"] = cell.gold_entity ? nlohmann::ordered_json(*cell.gold_entity) : nlohmann::ordered_json(nullptr);
            cells.push_back(std::move(c));
        }
        rec["cells"] = std::move(cells);
        auto labels = nlohmann::ordered_json::object();
        for (const auto& [col, types] : table.gold_labels) {
            labels[std::to_string(col)] = std::vector<std::string>(types.begin(), types.end());
        }
        rec["gold_labels"] = std::move(labels);
        out << rec.dump() << '\n';
    }
}

/// One label per line, file order preserved. Duplicates and empty files are errors.
inline LabelVocabulary parse_vocabulary(std::istream& in) {
    std::vector<std::string> labels;
    std::string line;
    std::size_t line_no = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = text::strip_cr(line);
        if (view.empty()) continue;
        if (!seen.emplace(view).second) {
            throw ParseError("line " + std::to_string(line_no) + ": duplicate label '" + std::string(view) + "'");
        }
        labels.emplace_back(view);
    }
    if (labels.empty()) throw ParseError("vocabulary is empty");
    return LabelVocabulary(std::move(labels));
}

inline LabelVocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open vocabulary '" + path.string() + "'");
    try {
        return parse_vocabulary(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

/// CSV rendering of the whole table with the query column moved to the front,
/// so that "the first column" in a prompt always denotes the query column.
/// Data rows only, joined by "\n" with no trailing newline.
inline std::string serialize_table_csv(const ColumnQuery& query, std::optional<std::size_t> max_rows = std::nullopt) {
    const Table& table = query.table();
    const std::size_t rows = max_rows ? std::min(table.n_rows, *max_rows) : table.n_rows;

    std::vector<std::size_t> order;
    order.reserve(table.n_cols);
    order.push_back(query.target_col());
    for (std::size_t c = 0; c < table.n_cols; ++c) {
        if (c != query.target_col()) order.push_back(c);
    }

    std::string out;
    for (std::size_t r = 0; r < rows; ++r) {
        if (r > 0) out.push_back('\n');
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i > 0) out.push_back(',');
            out += csv_field(table.cell(r, order[i]).text);
        }
    }
    return out;
}

} // namespace racoon
