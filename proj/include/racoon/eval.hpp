#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/error.hpp"
#include "racoon/processor.hpp"

namespace racoon {

enum class EvalMode { multi, single };

inline std::string_view to_string(EvalMode m) { return m == EvalMode::multi ? "multi" : "single"; }

inline EvalMode parse_eval_mode(std::string_view s) {
    if (s == "multi") return EvalMode::multi;
    if (s == "single") return EvalMode::single;
    throw ParseError("unknown evaluation mode '" + std::string(s) + "'");
}

struct ColumnRecord {
    std::string table_id;
    std::size_t col = 0;
    std::set<std::string> gold;
    std::vector<std::string> predicted;
    ContextKind context_kind = ContextKind::none;
    bool fallback_used = false;
    bool parse_ok = false;

    friend bool operator==(const ColumnRecord&, const ColumnRecord&) = default;
};

struct EvalReport {
    EvalMode mode = EvalMode::multi;
    double micro_f1 = 0.0;
    std::optional<double> el_accuracy;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::vector<ColumnRecord> per_column;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// 2TP / (2TP + FP + FN), with 0/0 defined as 0.
inline double micro_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

/// Label-instance confusion counts pooled over all columns; predictions are
/// compared as sets.
inline EvalReport micro_f1_multi(std::span<const ColumnRecord> records) {
    if (records.empty()) throw UsageError("micro_f1_multi: no records");
    EvalReport report;
    report.mode = EvalMode::multi;
    for (const auto& rec : records) {
        const std::set<std::string> predicted(rec.predicted.begin(), rec.predicted.end());
        for (const auto& p : predicted) {
            if (rec.gold.contains(p)) {
                ++report.tp;
            } else {
                ++report.fp;
            }
        }
        for (const auto& g : rec.gold) {
            if (!predicted.contains(g)) ++report.fn;
        }
    }
    report.micro_f1 = micro_f1(report.tp, report.fp, report.fn);
    report.per_column.assign(records.begin(), records.end());
    return report;
}

/// Single-label protocol: a prediction inside the gold set is one TP; any
/// other prediction is one FP and one FN; no prediction is one FN.
inline EvalReport micro_f1_single(std::span<const ColumnRecord> records) {
    if (records.empty()) throw UsageError("micro_f1_single: no records");
    EvalReport report;
    report.mode = EvalMode::single;
    for (const auto& rec : records) {
        if (rec.predicted.size() > 1) {
            throw UsageError("micro_f1_single: table '" + rec.table_id + "' column " + std::to_string(rec.col) +
                             " has " + std::to_string(rec.predicted.size()) + " predictions");
        }
        if (rec.predicted.empty()) {
            ++report.fn;
        } else if (rec.gold.contains(rec.predicted.front())) {
            ++report.tp;
        } else {
            ++report.fp;
            ++report.fn;
        }
    }
    report.micro_f1 = micro_f1(report.tp, report.fp, report.fn);
    report.per_column.assign(records.begin(), records.end());
    return report;
}

inline constexpr std::string_view metric_definition =
    "micro-F1 = 2TP/(2TP+FP+FN) over label instances pooled across columns";

inline nlohmann::ordered_json to_json(const ColumnRecord& rec) {
    nlohmann::ordered_json j;
    j["table_id"] = rec.table_id;
    j["col"] = rec.col;
    j["gold"] = std::vector<std::string>(rec.gold.begin(), rec.gold.end());
    j["predicted"] = rec.predicted;
    j["context_kind"] = to_string(rec.context_kind);
    j["fallback_used"] = rec.fallback_used;
    j["parse_ok"] = rec.parse_ok;
    return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(report.mode);
    j["metric"] = metric_definition;
    j["micro_f1"] = report.micro_f1;
    j["el_accuracy"] = report.el_accuracy ? nlohmann::ordered_json(*report.el_accuracy) : nlohmann::ordered_json(nullptr);
    j["tp"] = report.tp;
    j["fp"] = report.fp;
    j["fn"] = report.fn;
    auto columns = nlohmann::ordered_json::array();
    for (const auto& rec : report.per_column) columns.push_back(to_json(rec));
    j["columns"] = std::move(columns);
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    try {
        EvalReport report;
        report.mode = parse_eval_mode(j.at("mode").get<std::string>());
        report.micro_f1 = j.at("micro_f1").get<double>();
        if (!j.at("el_accuracy").is_null()) report.el_accuracy = j.at("el_accuracy").get<double>();
        report.tp = j.at("tp").get<std::size_t>();
        report.fp = j.at("fp").get<std::size_t>();
        report.fn = j.at("fn").get<std::size_t>();
        for (const auto& c : j.at("columns")) {
            ColumnRecord rec;
            rec.table_id = c.at("table_id").get<std::string>();
            rec.col = c.at("col").get<std::size_t>();
            const auto gold = c.at("gold").get<std::vector<std::string>>();
            rec.gold = std::set<std::string>(gold.begin(), gold.end());
            rec.predicted = c.at("predicted").get<std::vector<std::string>>();
            rec.context_kind = parse_context_kind(c.at("context_kind").get<std::string>());
            rec.fallback_used = c.at("fallback_used").get<bool>();
            rec.parse_ok = c.at("parse_ok").get<bool>();
            report.per_column.push_back(std::move(rec));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
}

/// Canonical report text: two-space indented JSON plus trailing newline.
inline std::string render_report(const EvalReport& report) { return to_json(report).dump(2) + "\n"; }

inline void emit_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report '" + path.string() + "'");
    out << render_report(report);
    if (!out.flush()) throw Error("failed writing report '" + path.string() + "'");
}

inline EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open report '" + path.string() + "'");
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace racoon
