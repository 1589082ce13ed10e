// Command-line front end: annotate, link-report, dump-prompts.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "racoon/pipeline.hpp"

namespace {

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::string> dataset;
    std::optional<std::string> vocab;
    std::optional<std::string> kg;
    std::optional<std::string> kg_language;
    std::optional<std::string> cache_dir;
    std::optional<std::string> linker;
    std::optional<std::string> linker_endpoint;
    std::optional<std::string> context;
    std::optional<std::string> mode;
    std::optional<std::string> llm;
    std::optional<std::string> llm_url;
    std::optional<std::string> model;
    std::optional<std::string> api_key_env;
    std::optional<double> temperature;
    std::optional<std::size_t> top_k;
    std::optional<std::size_t> max_rows;
    std::optional<std::string> fallback_policy;
    std::optional<std::string> instance_of;
    std::optional<std::string> out;
    std::optional<std::size_t> jobs;
    bool corrected_system = false;
};

void add_common(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config, "JSON run configuration; flags override its fields");
    cmd.add_option("--dataset", o.dataset, "JSONL dataset");
    cmd.add_option("--kg", o.kg, "KG snapshot TSV or MediaWiki API URL");
    cmd.add_option("--kg-language", o.kg_language, "label language for a remote KG");
    cmd.add_option("--cache-dir", o.cache_dir, "on-disk response cache for a remote KG");
    cmd.add_option("--linker", o.linker, "ground-truth | label-match | remote");
    cmd.add_option("--linker-endpoint", o.linker_endpoint, "search endpoint for --linker remote (defaults to --kg)");
    cmd.add_option("--out", o.out, "output path");
    cmd.add_option("--jobs", o.jobs, "parallel columns")->check(CLI::PositiveNumber);
}

void add_prompt_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--vocab", o.vocab, "label vocabulary, one type per line");
    cmd.add_option("--context", o.context, "none | entity-labels | entity-triplets");
    cmd.add_option("--mode", o.mode, "multi | single");
    cmd.add_option("--top-k", o.top_k, "context entries kept (0 = all)");
    cmd.add_option("--max-rows", o.max_rows, "rows serialized into the prompt");
    cmd.add_option("--fallback-policy", o.fallback_policy, "all_failed | any_failed");
    cmd.add_option("--instance-of", o.instance_of, "relation used for entity triplets");
    cmd.add_flag("--corrected-system-message", o.corrected_system, "fix the spelling in the system message");
}

void add_llm_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--llm", o.llm, "live | replay:<path> | mock:<path>");
    cmd.add_option("--llm-url", o.llm_url, "chat completions URL for --llm live");
    cmd.add_option("--model", o.model, "model name for --llm live");
    cmd.add_option("--api-key-env", o.api_key_env, "environment variable holding the API key");
    cmd.add_option("--temperature", o.temperature, "sampling temperature");
}

racoon::RunConfig build_config(const Overrides& o) {
    using namespace racoon;
    RunConfig cfg = o.config ? load_run_config(*o.config) : RunConfig{};
    if (o.dataset) cfg.dataset = *o.dataset;
    if (o.vocab) cfg.vocab = *o.vocab;
    if (o.kg) cfg.kg = *o.kg;
    if (o.kg_language) cfg.kg_language = *o.kg_language;
    if (o.cache_dir) cfg.cache_dir = *o.cache_dir;
    if (o.linker) cfg.linker = parse_linker_kind(*o.linker);
    if (o.linker_endpoint) cfg.linker_endpoint = *o.linker_endpoint;
    if (o.context) cfg.context = parse_context_kind(*o.context);
    if (o.mode) cfg.mode = parse_prompt_mode(*o.mode);
    if (o.llm) cfg.llm = parse_llm_spec(*o.llm, cfg.llm.value_or(LlmSpec{}));
    if (o.llm_url || o.model || o.api_key_env || o.temperature) {
        if (!cfg.llm) throw ConfigError("--llm-url, --model, --api-key-env and --temperature need --llm");
        if (o.llm_url) cfg.llm->live.url = *o.llm_url;
        if (o.model) cfg.llm->live.model = *o.model;
        if (o.api_key_env) cfg.llm->live.api_key_env = *o.api_key_env;
        if (o.temperature) cfg.llm->temperature = *o.temperature;
    }
    if (o.top_k) cfg.top_k = *o.top_k;
    if (o.max_rows) cfg.max_rows = *o.max_rows;
    if (o.fallback_policy) cfg.fallback_policy = parse_fallback_policy(*o.fallback_policy);
    if (o.instance_of) cfg.instance_of = *o.instance_of;
    if (o.corrected_system) cfg.verbatim_system_typo = false;
    if (o.out) cfg.out = *o.out;
    if (o.jobs) cfg.jobs = *o.jobs;
    return cfg;
}

std::string format_fraction(const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("undefined");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Column type annotation with knowledge-graph context"};
    app.require_subcommand(1);

    Overrides annotate_opts, link_opts, dump_opts;

    auto* annotate = app.add_subcommand("annotate", "annotate every labeled column and score the predictions");
    add_common(*annotate, annotate_opts);
    add_prompt_flags(*annotate, annotate_opts);
    add_llm_flags(*annotate, annotate_opts);

    auto* link = app.add_subcommand("link-report", "link every cell and report accuracy against gold links");
    add_common(*link, link_opts);

    auto* dump = app.add_subcommand("dump-prompts", "write the prompts an annotate run would send");
    add_common(*dump, dump_opts);
    add_prompt_flags(*dump, dump_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (annotate->parsed()) {
            auto cfg = build_config(annotate_opts);
            if (cfg.out.empty()) throw racoon::ConfigError("annotate needs --out");
            const auto report = racoon::run_annotate(cfg);
            std::cout << "micro_f1 " << report.micro_f1 << " (tp " << report.tp << ", fp " << report.fp << ", fn "
                      << report.fn << ")\n"
                      << "el_accuracy " << format_fraction(report.el_accuracy) << "\n"
                      << "columns " << report.per_column.size() << "\n"
                      << "report " << cfg.out.string() << "\n";
        } else if (link->parsed()) {
            const auto cfg = build_config(link_opts);
            const auto report = racoon::run_link_report(cfg);
            std::cout << "cells " << report.cells << "\n"
                      << "gold_cells " << report.gold_cells << "\n"
                      << "linked " << report.linked << "\n"
                      << "accuracy " << format_fraction(report.accuracy) << "\n";
        } else if (dump->parsed()) {
            const auto cfg = build_config(dump_opts);
            const auto entries = racoon::dump_prompts(cfg);
            if (cfg.out.empty()) {
                for (const auto& e : entries) {
                    std::cout << racoon::prompt_dump_record(e.table_id, e.col, e.prompt).dump() << '\n';
                }
            } else {
                std::cout << "prompts " << entries.size() << "\n";
            }
        }
    } catch (const racoon::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const racoon::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return EXIT_SUCCESS;
}
