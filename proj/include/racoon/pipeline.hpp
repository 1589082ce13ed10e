#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/augmentor.hpp"
#include "racoon/eval.hpp"
#include "racoon/kgstore.hpp"
#include "racoon/linking.hpp"
#include "racoon/live_llm.hpp"
#include "racoon/llm.hpp"
#include "racoon/processor.hpp"
#include "racoon/remote_kg.hpp"
#include "racoon/retriever.hpp"
#include "racoon/tabular.hpp"

namespace racoon {

enum class LlmKind { live, replay, mock };

struct LlmSpec {
    LlmKind kind = LlmKind::mock;
    /// Replay cache or mock lookup file.
    std::filesystem::path path;
    LiveLlmConfig live;
    double temperature = 0.0;
};

/// Parses "live", "replay:<path>" or "mock:<path>".
inline LlmSpec parse_llm_spec(std::string_view s, LlmSpec base = {}) {
    if (s == "live") {
        base.kind = LlmKind::live;
        return base;
    }
    const auto colon = s.find(':');
    if (colon != std::string_view::npos && colon + 1 < s.size()) {
        const auto tag = s.substr(0, colon);
        base.path = std::string(s.substr(colon + 1));
        if (tag == "replay") {
            base.kind = LlmKind::replay;
            return base;
        }
        if (tag == "mock") {
            base.kind = LlmKind::mock;
            return base;
        }
    }
    throw ConfigError("unknown LLM backend '" + std::string(s) + "' (expected live, replay:<path> or mock:<path>)");
}

struct RunConfig {
    std::filesystem::path dataset;
    std::filesystem::path vocab;
    /// Snapshot TSV path or a Wikibase API URL.
    std::string kg;
    std::string kg_language = "en";
    std::filesystem::path cache_dir;
    LinkerKind linker = LinkerKind::ground_truth;
    /// Search endpoint of an external linker; defaults to the KG when it is remote.
    std::string linker_endpoint;
    ContextKind context = ContextKind::entity_triplets;
    PromptMode mode = PromptMode::multi_label;
    std::optional<LlmSpec> llm;
    std::size_t top_k = 10;
    std::optional<std::size_t> max_rows;
    FallbackPolicy fallback_policy = FallbackPolicy::all_failed;
    std::string instance_of = "P31";
    bool verbatim_system_typo = true;
    std::filesystem::path out;
    std::size_t jobs = 1;
};

namespace detail {

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

inline std::string resolve_source(const std::filesystem::path& base, const std::string& s) {
    return http::is_url(s) ? s : resolve_path(base, s).string();
}

} // namespace detail

/// Reads a JSON run configuration. Relative paths are resolved against the
/// file's directory.
///
///   {"dataset": "...", "vocab": "...",
///    "kg": {"source": "<tsv or URL>", "language": "en", "cache_dir": "..."},
///    "linker": {"kind": "ground-truth", "endpoint": "<URL>"},
///    "context": "entity-triplets", "mode": "multi",
///    "llm": {"backend": "mock:<path>", "url": "...", "model": "...",
///            "api_key_env": "OPENAI_API_KEY", "temperature": 0,
///            "max_in_flight": 4, "requests_per_second": 0},
///    "top_k": 10, "max_rows": null, "fallback_policy": "all_failed",
///    "instance_of": "P31", "verbatim_system_typo": true,
///    "out": "report.json", "jobs": 1}
inline RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
    RunConfig cfg;
    try {
        if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
        if (doc.contains("dataset")) cfg.dataset = detail::resolve_path(base_dir, doc.at("dataset").get<std::string>());
        if (doc.contains("vocab")) cfg.vocab = detail::resolve_path(base_dir, doc.at("vocab").get<std::string>());
        if (doc.contains("kg")) {
            const auto& kg = doc.at("kg");
            if (kg.is_string()) {
                cfg.kg = detail::resolve_source(base_dir, kg.get<std::string>());
            } else {
                cfg.kg = detail::resolve_source(base_dir, kg.at("source").get<std::string>());
                if (kg.contains("language")) cfg.kg_language = kg.at("language").get<std::string>();
                if (kg.contains("cache_dir")) {
                    cfg.cache_dir = detail::resolve_path(base_dir, kg.at("cache_dir").get<std::string>());
                }
            }
        }
        if (doc.contains("linker")) {
            const auto& linker = doc.at("linker");
            if (linker.is_string()) {
                cfg.linker = parse_linker_kind(linker.get<std::string>());
            } else {
                cfg.linker = parse_linker_kind(linker.at("kind").get<std::string>());
                if (linker.contains("endpoint")) cfg.linker_endpoint = linker.at("endpoint").get<std::string>();
            }
        }
        if (doc.contains("context")) cfg.context = parse_context_kind(doc.at("context").get<std::string>());
        if (doc.contains("mode")) cfg.mode = parse_prompt_mode(doc.at("mode").get<std::string>());
        if (doc.contains("llm")) {
            const auto& llm = doc.at("llm");
            LlmSpec spec;
            const auto& backend = llm.is_string() ? llm : llm.at("backend");
            spec = parse_llm_spec(backend.get<std::string>());
            if (spec.kind != LlmKind::live) spec.path = detail::resolve_path(base_dir, spec.path.string());
            if (llm.is_object()) {
                if (llm.contains("url")) spec.live.url = llm.at("url").get<std::string>();
                if (llm.contains("model")) spec.live.model = llm.at("model").get<std::string>();
                if (llm.contains("api_key_env")) spec.live.api_key_env = llm.at("api_key_env").get<std::string>();
                if (llm.contains("temperature")) spec.temperature = llm.at("temperature").get<double>();
                if (llm.contains("max_in_flight")) spec.live.max_in_flight = llm.at("max_in_flight").get<std::ptrdiff_t>();
                if (llm.contains("requests_per_second")) {
                    spec.live.requests_per_second = llm.at("requests_per_second").get<double>();
                }
            }
            cfg.llm = spec;
        }
        if (doc.contains("top_k")) cfg.top_k = doc.at("top_k").get<std::size_t>();
        if (doc.contains("max_rows") && !doc.at("max_rows").is_null()) cfg.max_rows = doc.at("max_rows").get<std::size_t>();
        if (doc.contains("fallback_policy")) {
            cfg.fallback_policy = parse_fallback_policy(doc.at("fallback_policy").get<std::string>());
        }
        if (doc.contains("instance_of")) cfg.instance_of = doc.at("instance_of").get<std::string>();
        if (doc.contains("verbatim_system_typo")) cfg.verbatim_system_typo = doc.at("verbatim_system_typo").get<bool>();
        if (doc.contains("out")) cfg.out = detail::resolve_path(base_dir, doc.at("out").get<std::string>());
        if (doc.contains("jobs")) cfg.jobs = doc.at("jobs").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open configuration '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

/// Loaded and validated resources for one run.
struct Session {
    RunConfig config;
    std::vector<Table> tables;
    LabelVocabulary vocab;
    std::unique_ptr<KnowledgeGraph> kg;
    std::unique_ptr<KnowledgeGraph> linker_backend;
    std::unique_ptr<Linker> linker;
    std::unique_ptr<LlmBackend> llm;
};

inline std::unique_ptr<KnowledgeGraph> open_kg(const std::string& source, const RunConfig& cfg) {
    if (http::is_url(source)) {
        RemoteKgConfig remote;
        remote.api_url = source;
        remote.language = cfg.kg_language;
        remote.cache_dir = cfg.cache_dir;
        remote.max_in_flight = static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, cfg.jobs));
        return std::make_unique<RemoteKg>(std::move(remote));
    }
    return std::make_unique<LocalKg>(load_snapshot(source));
}

inline std::unique_ptr<LlmBackend> open_llm(const LlmSpec& spec) {
    switch (spec.kind) {
        case LlmKind::live: return std::make_unique<LiveBackend>(spec.live);
        case LlmKind::replay: return std::make_unique<ReplayBackend>(ReplayCache::load(spec.path));
        case LlmKind::mock: return std::make_unique<MockBackend>(MockBackend::from_lookup_file(spec.path));
    }
    throw ConfigError("unknown LLM backend");
}

/// Loads inputs and checks cross-field consistency. `need_llm` is false for
/// prompt dumps and link reports.
inline Session open_session(const RunConfig& cfg, bool need_llm, bool need_vocab = true) {
    if (cfg.dataset.empty()) throw ConfigError("no dataset configured");
    if (need_vocab && cfg.vocab.empty()) throw ConfigError("no vocabulary configured");
    if (cfg.kg.empty()) throw ConfigError("no knowledge graph configured");
    if (need_llm && !cfg.llm) throw ConfigError("no LLM backend configured");
    if (cfg.instance_of.empty()) throw ConfigError("instance_of relation must be non-empty");

    Session s;
    s.config = cfg;
    s.tables = load_dataset(cfg.dataset);
    if (need_vocab) s.vocab = load_vocabulary(cfg.vocab);
    s.kg = open_kg(cfg.kg, cfg);

    LinkerSpec spec{cfg.linker, s.kg.get(), nullptr};
    if (cfg.linker == LinkerKind::remote && !cfg.linker_endpoint.empty()) {
        s.linker_backend = open_kg(cfg.linker_endpoint, cfg);
        spec.search_backend = s.linker_backend.get();
    }
    s.linker = make_linker(spec, s.tables);
    if (need_llm) s.llm = open_llm(*cfg.llm);
    return s;
}

/// Everything produced for one annotated column.
struct ColumnResult {
    ColumnRecord record;
    Prompt prompt;
    std::vector<Cell> cells;
    std::vector<LinkOutcome> outcomes;
};

/// Retrieval, processing and prompt composition for one column.
inline std::pair<Prompt, bool> compose_column_prompt(const Session& s, const ColumnQuery& query,
                                                     RetrievalResult* retrieval_out = nullptr) {
    const RunConfig& cfg = s.config;
    RetrievalResult retrieval =
        retrieve(query, *s.linker, *s.kg, RetrieveOptions{cfg.fallback_policy, cfg.instance_of});
    const PromptOptions popts{cfg.max_rows, cfg.verbatim_system_typo};

    bool fallback = false;
    std::optional<ColumnContext> ctx;
    if (cfg.context != ContextKind::none) {
        if (retrieval.fallback) {
            fallback = true;
        } else {
            ctx = build_context(retrieval, cfg.context, cfg.instance_of, cfg.top_k);
            if (ctx->empty()) {
                fallback = true;
                ctx.reset();
            }
        }
    }
    Prompt prompt = build_prompt(query, s.vocab, ctx ? &*ctx : nullptr, cfg.mode, popts);
    if (retrieval_out != nullptr) *retrieval_out = std::move(retrieval);
    return {std::move(prompt), fallback};
}

inline ColumnResult annotate_column(const Session& s, const Table& table, std::size_t col) {
    const ColumnQuery query(table, col);
    RetrievalResult retrieval{.query = query};
    auto [prompt, fallback] = compose_column_prompt(s, query, &retrieval);

    CompletionRequest request{prompt, s.config.llm ? s.config.llm->temperature : 0.0,
                              s.config.llm ? s.config.llm->live.model : std::string{}};
    const std::string raw = s.llm->complete(request);
    const Prediction prediction = parse_prediction(raw, s.vocab, s.config.mode);

    ColumnResult result;
    result.record.table_id = table.table_id;
    result.record.col = col;
    result.record.gold = table.gold_labels.at(col);
    result.record.predicted = prediction.labels;
    result.record.context_kind = prompt.kind;
    result.record.fallback_used = fallback;
    result.record.parse_ok = prediction.parse_ok;
    result.prompt = std::move(prompt);
    result.cells = std::move(retrieval.cells);
    result.outcomes = std::move(retrieval.outcomes);
    return result;
}

struct ColumnTask {
    const Table* table;
    std::size_t col;
};

/// Every labeled column, in dataset order then column order.
inline std::vector<ColumnTask> labeled_columns(const std::vector<Table>& tables) {
    std::vector<ColumnTask> tasks;
    for (const auto& t : tables) {
        for (const auto& [col, _] : t.gold_labels) tasks.push_back(ColumnTask{&t, col});
    }
    return tasks;
}

inline std::filesystem::path prompt_dump_path(const std::filesystem::path& out) {
    auto p = out;
    p.replace_extension(".prompts.jsonl");
    return p;
}

/// Runs `work(i)` for i in [0, n) on up to `jobs` threads. Stops handing out
/// work after the first failure and rethrows it, tagged with its index.
template <typename Work>
std::optional<std::pair<std::size_t, std::exception_ptr>> parallel_for(std::size_t n, std::size_t jobs, Work&& work) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::optional<std::pair<std::size_t, std::exception_ptr>> first_error;

    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error || i < first_error->first) first_error.emplace(i, std::current_exception());
                failed.store(true);
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return first_error;
}

inline std::string describe_exception(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

inline void write_prompt_dump(const std::filesystem::path& path, const std::vector<std::optional<ColumnResult>>& results) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write prompt dump '" + path.string() + "'");
    for (const auto& r : results) {
        if (r) out << prompt_dump_record(r->record.table_id, r->record.col, r->prompt).dump() << '\n';
    }
}

/// The annotate run: every labeled column goes through retrieval, context
/// building, prompting, completion and parsing; then the run is scored.
/// Writes the report to `config.out` (when set) with the prompt dump beside it.
inline EvalReport run_annotate(const Session& s) {
    const auto tasks = labeled_columns(s.tables);
    if (tasks.empty()) throw ConfigError("dataset has no labeled columns to evaluate");

    std::vector<std::optional<ColumnResult>> results(tasks.size());
    const auto error = parallel_for(tasks.size(), s.config.jobs, [&](std::size_t i) {
        results[i] = annotate_column(s, *tasks[i].table, tasks[i].col);
    });

    if (error) {
        const auto& task = tasks[error->first];
        if (!s.config.out.empty()) {
            write_prompt_dump(prompt_dump_path(s.config.out), results);
            auto partial = s.config.out;
            partial.replace_extension(".partial.jsonl");
            std::ofstream out(partial, std::ios::binary | std::ios::trunc);
            for (const auto& r : results) {
                if (r) out << to_json(r->record).dump() << '\n';
            }
        }
        throw Error("table '" + task.table->table_id + "' column " + std::to_string(task.col) + ": " +
                    describe_exception(error->second));
    }

    std::vector<ColumnRecord> records;
    std::vector<Cell> all_cells;
    std::vector<LinkOutcome> all_outcomes;
    for (const auto& r : results) {
        records.push_back(r->record);
        all_cells.insert(all_cells.end(), r->cells.begin(), r->cells.end());
        all_outcomes.insert(all_outcomes.end(), r->outcomes.begin(), r->outcomes.end());
    }

    EvalReport report = s.config.mode == PromptMode::multi_label ? micro_f1_multi(records) : micro_f1_single(records);
    report.el_accuracy = linking_accuracy(all_outcomes, all_cells);

    if (!s.config.out.empty()) {
        emit_report(report, s.config.out);
        write_prompt_dump(prompt_dump_path(s.config.out), results);
    }
    return report;
}

inline EvalReport run_annotate(const RunConfig& config) { return run_annotate(open_session(config, true)); }

struct PromptDumpEntry {
    std::string table_id;
    std::size_t col = 0;
    Prompt prompt;
    bool fallback_used = false;
};

/// Composes every labeled column's prompt without calling a model. Writes
/// JSONL to `config.out` when set.
inline std::vector<PromptDumpEntry> dump_prompts(const Session& s) {
    const auto tasks = labeled_columns(s.tables);
    std::vector<std::optional<PromptDumpEntry>> entries(tasks.size());
    const auto error = parallel_for(tasks.size(), s.config.jobs, [&](std::size_t i) {
        const ColumnQuery query(*tasks[i].table, tasks[i].col);
        auto [prompt, fallback] = compose_column_prompt(s, query);
        entries[i] = PromptDumpEntry{tasks[i].table->table_id, tasks[i].col, std::move(prompt), fallback};
    });
    if (error) {
        const auto& task = tasks[error->first];
        throw Error("table '" + task.table->table_id + "' column " + std::to_string(task.col) + ": " +
                    describe_exception(error->second));
    }

    std::vector<PromptDumpEntry> out;
    for (auto& e : entries) out.push_back(std::move(*e));
    if (!s.config.out.empty()) {
        std::ofstream file(s.config.out, std::ios::binary | std::ios::trunc);
        if (!file) throw Error("cannot write prompt dump '" + s.config.out.string() + "'");
        for (const auto& e : out) file << prompt_dump_record(e.table_id, e.col, e.prompt).dump() << '\n';
    }
    return out;
}

inline std::vector<PromptDumpEntry> dump_prompts(const RunConfig& config) {
    return dump_prompts(open_session(config, false));
}

struct LinkReport {
    std::size_t cells = 0;
    std::size_t gold_cells = 0;
    std::size_t linked = 0;
    std::optional<double> accuracy;
};

/// Links every non-empty cell of every column and scores against gold links.
/// Writes the per-cell JSONL report to `config.out` when set.
inline LinkReport run_link_report(const Session& s) {
    struct TableLinks {
        std::vector<Cell> cells;
        std::vector<LinkOutcome> outcomes;
    };
    std::vector<TableLinks> per_table(s.tables.size());
    const auto error = parallel_for(s.tables.size(), s.config.jobs, [&](std::size_t i) {
        const Table& t = s.tables[i];
        for (const auto& cell : t.cells) {
            if (!cell.text.empty()) per_table[i].cells.push_back(cell);
        }
        if (!per_table[i].cells.empty()) per_table[i].outcomes = link_cells(*s.linker, per_table[i].cells);
    });
    if (error) {
        throw Error("table '" + s.tables[error->first].table_id + "': " + describe_exception(error->second));
    }

    std::ofstream file;
    if (!s.config.out.empty()) {
        file.open(s.config.out, std::ios::binary | std::ios::trunc);
        if (!file) throw Error("cannot write link report '" + s.config.out.string() + "'");
    }

    LinkReport report;
    std::vector<Cell> all_cells;
    std::vector<LinkOutcome> all_outcomes;
    for (std::size_t i = 0; i < s.tables.size(); ++i) {
        const auto& tl = per_table[i];
        if (file.is_open()) write_link_report(file, s.tables[i].table_id, tl.outcomes, tl.cells);
        all_cells.insert(all_cells.end(), tl.cells.begin(), tl.cells.end());
        all_outcomes.insert(all_outcomes.end(), tl.outcomes.begin(), tl.outcomes.end());
    }
    report.cells = all_cells.size();
    for (const auto& c : all_cells) report.gold_cells += c.gold_entity ? 1 : 0;
    for (const auto& o : all_outcomes) report.linked += o.linked ? 1 : 0;
    report.accuracy = linking_accuracy(all_outcomes, all_cells);
    return report;
}

inline LinkReport run_link_report(const RunConfig& config) {
    Session s = open_session(config, false, false);
    bool any_gold = false;
    for (const auto& t : s.tables) any_gold = any_gold || t.has_gold_links();
    if (!any_gold) throw ConfigError("link-report needs gold_entity fields in the dataset");
    return run_link_report(s);
}

} // namespace racoon
