// Minimal library use: annotate one column against a local snapshot with a
// canned model answer, printing the prompt and the parsed prediction.
//
//   annotate_example <dataset.jsonl> <kg.tsv> <types.txt> <table_id> <col>

#include <cstdlib>
#include <iostream>
#include <string>

#include "racoon/pipeline.hpp"

int main(int argc, char** argv) {
    if (argc != 6) {
        std::cerr << "usage: " << argv[0] << " <dataset.jsonl> <kg.tsv> <types.txt> <table_id> <col>\n";
        return 2;
    }
    try {
        racoon::RunConfig cfg;
        cfg.dataset = argv[1];
        cfg.kg = argv[2];
        cfg.vocab = argv[3];
        cfg.linker = racoon::LinkerKind::label_match;
        racoon::Session s = racoon::open_session(cfg, false);
        s.llm = std::make_unique<racoon::MockBackend>(
            [](const racoon::Prompt&) { return std::string(R"(Answer: {"type": ["people.person"]})"); });

        const std::string table_id = argv[4];
        const auto col = static_cast<std::size_t>(std::stoul(argv[5]));
        for (const auto& t : s.tables) {
            if (t.table_id != table_id) continue;
            const auto result = racoon::annotate_column(s, t, col);
            std::cout << result.prompt.user << "\n\npredicted:";
            for (const auto& label : result.record.predicted) std::cout << ' ' << label;
            std::cout << (result.record.fallback_used ? "  (vanilla prompt)\n" : "\n");
            return EXIT_SUCCESS;
        }
        std::cerr << "no table '" << table_id << "'\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
