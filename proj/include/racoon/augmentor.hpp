#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/processor.hpp"
#include "racoon/tabular.hpp"

namespace racoon {

enum class PromptMode { single_label, multi_label };

inline std::string_view to_string(PromptMode mode) { return mode == PromptMode::single_label ? "single" : "multi"; }

inline PromptMode parse_prompt_mode(std::string_view s) {
    if (s == "single" || s == "single_label" || s == "single-label") return PromptMode::single_label;
    if (s == "multi" || s == "multi_label" || s == "multi-label") return PromptMode::multi_label;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

struct Prompt {
    std::string system;
    std::string user;
    PromptMode mode = PromptMode::multi_label;
    /// Context actually rendered; `none` for vanilla prompts.
    ContextKind kind = ContextKind::none;

    friend bool operator==(const Prompt&, const Prompt&) = default;
};

namespace templates {

// "desiged" is the published wording.
inline constexpr std::string_view system_message =
    "Be a helpful, accurate assistant for data discovery and exploration desiged to output valid JSON in the "
    "format {'type': []}";
inline constexpr std::string_view system_message_corrected =
    "Be a helpful, accurate assistant for data discovery and exploration designed to output valid JSON in the "
    "format {'type': []}";

inline constexpr std::string_view table_intro = "Consider this table given in Comma-separated Values format:\n";
inline constexpr std::string_view fence = "                            ```\n";
inline constexpr std::string_view table_indent = "                            ";

inline constexpr std::string_view task_single =
    "Your task is to choose only one type from the list to annotate the first column.";
inline constexpr std::string_view task_multi =
    "Your task is to choose one or multiple types from the list to annotate the first column.";
inline constexpr std::string_view steps_intro = " Solve this task by following these steps: \n";

inline constexpr std::string_view step_look = "Look at the cells in the first column of the above table. ";
inline constexpr std::string_view step_context = "Consider this information carefully: ";
inline constexpr std::string_view step_choose_single =
    "Choose only one valid type from the given list of types. Check that the type MUST be in the list. Give the "
    "answer in valid JSON format.";
inline constexpr std::string_view step_mark_multi =
    "Mark each type in the given list with 0 or 1. Mark a type with 1 if it can better represent all cells of the "
    "first column. Mark a type with 0 otherwise. ";
inline constexpr std::string_view step_answer_multi =
    "Give a list of types that you have marked 1 in the previous step. Check that the types MUST be in the list. "
    "Give the answer in valid JSON format.";

inline constexpr std::string_view triplets_lead = "Cells in this column are instances of the following wikidata entities: ";
// Not printed in the published prompts; mirrors the triplets sentence.
inline constexpr std::string_view labels_lead = "Cells in this column are linked to the following wikidata entities: ";

} // namespace templates

/// KG-Context sentence, e.g. "Cells in this column are instances of the
/// following wikidata entities: human (6 cells)."
inline std::string serialize_context(const ColumnContext& ctx) {
    if (ctx.kind == ContextKind::none) throw UsageError("serialize_context: context kind is 'none'");
    if (ctx.entries.empty()) throw UsageError("serialize_context: context has no entries");
    std::string out(ctx.kind == ContextKind::entity_triplets ? templates::triplets_lead : templates::labels_lead);
    for (std::size_t i = 0; i < ctx.entries.size(); ++i) {
        const auto& e = ctx.entries[i];
        if (i > 0) out += ", ";
        out += e.display_label;
        out += " (";
        out += std::to_string(e.cell_count);
        out += e.cell_count == 1 ? " cell)" : " cells)";
    }
    out.push_back('.');
    return out;
}

inline std::string render_types(const LabelVocabulary& vocab) {
    std::string out;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (i > 0) out += ", ";
        out += vocab.labels()[i];
    }
    return out;
}

struct PromptOptions {
    std::optional<std::size_t> max_rows;
    /// Keep the published system message spelling.
    bool verbatim_system_typo = true;
};

/// Composes the system and user messages. Without a context the KG step is
/// dropped and the remaining steps are renumbered.
inline Prompt build_prompt(const ColumnQuery& query, const LabelVocabulary& vocab, const ColumnContext* ctx,
                           PromptMode mode, const PromptOptions& options = {}) {
    if (ctx != nullptr && (ctx->kind == ContextKind::none || ctx->entries.empty())) {
        throw UsageError("build_prompt: context must be non-empty; pass no context for a vanilla prompt");
    }

    std::vector<std::string> steps;
    steps.emplace_back(templates::step_look);
    if (ctx != nullptr) steps.push_back(std::string(templates::step_context) + serialize_context(*ctx));
    if (mode == PromptMode::single_label) {
        steps.emplace_back(templates::step_choose_single);
    } else {
        steps.emplace_back(templates::step_mark_multi);
        steps.emplace_back(templates::step_answer_multi);
    }

    std::string user;
    user += templates::table_intro;
    user += templates::fence;
    user += templates::table_indent;
    user += serialize_table_csv(query, options.max_rows);
    user += '\n';
    user += templates::fence;
    user += "There are a list of " + std::to_string(vocab.size()) + " valid types for each column: ";
    user += render_types(vocab);
    user += ". ";
    user += mode == PromptMode::single_label ? templates::task_single : templates::task_multi;
    user += templates::steps_intro;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i > 0) user += '\n';
        user += std::to_string(i + 1) + ". " + steps[i];
    }

    Prompt prompt;
    prompt.system = std::string(options.verbatim_system_typo ? templates::system_message
                                                              : templates::system_message_corrected);
    prompt.user = std::move(user);
    prompt.mode = mode;
    prompt.kind = ctx != nullptr ? ctx->kind : ContextKind::none;
    return prompt;
}

/// One prompt-dump line: {table_id, col, mode, kind, system, user}.
inline nlohmann::ordered_json prompt_dump_record(const std::string& table_id, std::size_t col, const Prompt& prompt) {
    nlohmann::ordered_json rec;
    rec["table_id"] = table_id;
    rec["col"] = col;
    rec["mode"] = to_string(prompt.mode);
    rec["kind"] = to_string(prompt.kind);
    rec["system"] = prompt.system;
    rec["user"] = prompt.user;
    return rec;
}

} // namespace racoon
