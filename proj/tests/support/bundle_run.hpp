#pragma once

#include <filesystem>

#include "racoon/fixtures.hpp"
#include "racoon/pipeline.hpp"

namespace racoon::testing {

/// Run configuration matching a bundle's expected run, with the mock LLM.
inline RunConfig bundle_config(const fixtures::FixtureBundle& b) {
    RunConfig cfg;
    cfg.dataset = b.dataset;
    cfg.vocab = b.vocabulary;
    cfg.kg = b.snapshot.string();
    cfg.linker = LinkerKind::ground_truth;
    cfg.context = ContextKind::entity_triplets;
    cfg.mode = PromptMode::multi_label;
    LlmSpec llm;
    llm.kind = LlmKind::mock;
    llm.path = b.llm_lookup;
    cfg.llm = llm;
    return cfg;
}

} // namespace racoon::testing
