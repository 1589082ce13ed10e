#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "racoon/error.hpp"

namespace racoon::fixtures {

/// Member files of a generated test corpus. Paths are absolute or relative to
/// the process working directory.
struct FixtureBundle {
    std::uint32_t seed = 0;
    std::size_t n_tables = 0;
    std::filesystem::path snapshot;
    std::filesystem::path dataset;
    std::filesystem::path vocabulary;
    std::filesystem::path llm_lookup;
    std::filesystem::path expected_report;
};

inline constexpr const char* manifest_name = "manifest.json";

/// Run settings the committed expected report was computed with.
struct ExpectedRun {
    std::string linker = "ground-truth";
    std::string context = "entity-triplets";
    std::string mode = "multi";
    std::size_t top_k = 10;
    std::string fallback_policy = "all_failed";
    std::string instance_of = "P31";
};

inline FixtureBundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream in(dir / manifest_name, std::ios::binary);
    if (!in) throw ParseError("cannot open bundle manifest in '" + dir.string() + "'");
    try {
        const auto doc = nlohmann::json::parse(in);
        FixtureBundle b;
        b.seed = doc.at("seed").get<std::uint32_t>();
        b.n_tables = doc.at("n_tables").get<std::size_t>();
        b.snapshot = dir / doc.at("snapshot").get<std::string>();
        b.dataset = dir / doc.at("dataset").get<std::string>();
        b.vocabulary = dir / doc.at("vocabulary").get<std::string>();
        b.llm_lookup = dir / doc.at("llm_lookup").get<std::string>();
        b.expected_report = dir / doc.at("expected_report").get<std::string>();
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(dir.string() + "/" + manifest_name + ": " + e.what());
    }
}

namespace detail {

/// Platform-independent draws on top of mt19937, whose output sequence is
/// fixed by the standard (the std distributions are not).
class Rng {
public:
    explicit Rng(std::uint32_t seed) : engine_(seed) {}

    /// Uniform in [0, n).
    std::uint32_t below(std::uint32_t n) {
        const std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
        std::uint32_t x;
        do {
            x = static_cast<std::uint32_t>(engine_());
        } while (x >= limit);
        return x % n;
    }

    std::uint32_t between(std::uint32_t lo, std::uint32_t hi) { return lo + below(hi - lo + 1); }

    /// True with probability percent / 100.
    bool chance(std::uint32_t percent) { return below(100) < percent; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(static_cast<std::uint32_t>(v.size()))];
    }

private:
    std::mt19937 engine_;
};

struct TypeSpec {
    std::string id;
    std::string kg_label;
    /// Gold CTA labels for a column of this type.
    std::vector<std::string> gold;
    /// Answer the mock model gives when this type leads the context. May be
    /// deliberately wrong or incomplete.
    std::string mock_answer;
};

inline const std::vector<TypeSpec>& type_universe() {
    static const std::vector<TypeSpec> types{
        {"Q5", "human", {"people.person"}, "people.person"},
        {"Q515", "city", {"location.citytown", "location.location"}, "location.citytown"},
        {"Q6256", "country", {"location.country", "location.location"}, "location.country"},
        {"Q476028", "association football club", {"soccer.football_team", "sports.sports_team"}, "sports.sports_team"},
        {"Q11424", "film", {"film.film"}, "film.film"},
        {"Q482994", "album", {"music.album"}, "music.composition"},
        {"Q7366", "song", {"music.composition"}, "music.composition"},
        {"Q3918", "university", {"education.university", "education.educational_institution"}, "education.university"},
        {"Q4830453", "business", {"business.business_operation", "organization.organization"}, "organization.organization"},
        {"Q523", "star", {"astronomy.star", "astronomy.celestial_object"}, "astronomy.star"},
        {"Q4022", "river", {"geography.river", "location.location"}, "geography.river"},
        {"Q8502", "mountain", {"geography.mountain", "location.location"}, "location.location"},
        {"Q1656682", "event", {"time.event"}, "time.event"},
        {"Q571", "book", {"book.book", "book.written_work"}, "book.written_work"},
        {"Q215380", "musical group", {"music.musical_group", "music.artist"}, "music.artist"},
        {"Q1248784", "airport", {"aviation.airport", "location.location"}, "architecture.building"},
        {"Q7889", "video game", {"cvg.computer_videogame"}, "cvg.computer_videogame"},
    };
    return types;
}

/// Secondary instance_of types an entity of a primary type may also carry.
inline const std::map<std::string, std::vector<std::pair<std::string, std::string>>>& secondary_types() {
    static const std::map<std::string, std::vector<std::pair<std::string, std::string>>> extra{
        {"Q5", {{"Q2066131", "athlete"}, {"Q82955", "politician"}}},
        {"Q515", {{"Q1549591", "big city"}}},
        {"Q11424", {{"Q24869", "feature film"}}},
        {"Q3918", {{"Q902104", "private university"}}},
        {"Q523", {{"Q5864", "red giant"}}},
        {"Q1656682", {{"Q500834", "tournament"}}},
    };
    return extra;
}

inline const std::vector<std::string>& extra_vocabulary() {
    static const std::vector<std::string> extra{
        "sports.pro_athlete",   "government.politician", "sports.sports_league", "government.political_party",
        "royalty.monarch",      "military.military_unit", "tv.tv_program",       "broadcast.radio_station",
        "architecture.building", "biology.organism",      "medicine.disease",    "law.court",
    };
    return extra;
}

inline std::string make_name(Rng& rng) {
    static const std::vector<std::string> onset{"b", "c", "d", "f", "g", "h", "k", "l", "m", "n",
                                                "p", "r", "s", "t", "v", "z", "br", "st", "tr", "gl"};
    static const std::vector<std::string> vowel{"a", "e", "i", "o", "u", "ai", "ea", "ou"};
    static const std::vector<std::string> coda{"", "n", "r", "s", "th", "l", "m", "x"};
    auto word = [&] {
        std::string w;
        const auto syllables = rng.between(2, 3);
        for (std::uint32_t i = 0; i < syllables; ++i) w += rng.pick(onset) + rng.pick(vowel) + rng.pick(coda);
        w[0] = static_cast<char>(w[0] - 'a' + 'A');
        return w;
    };
    return rng.chance(60) ? word() + " " + word() : word();
}

struct GenEntity {
    std::string id;
    std::string label;
    std::string alias;
    std::vector<std::string> types;
};

} // namespace detail

/// Writes a deterministic corpus for (seed, n_tables) into `dir`: KG snapshot,
/// gold-linked dataset, vocabulary and mock lookup. Tables carry 18-24 rows and
/// 3-5 entity columns. The expected report is written separately (see
/// oracle.hpp) so the generator stays independent of scoring.
inline FixtureBundle generate_fixture_files(std::uint32_t seed, std::size_t n_tables, const std::filesystem::path& dir) {
    if (n_tables == 0) throw UsageError("generate_fixture: n_tables must be >= 1");
    using namespace detail;
    Rng rng(seed);
    std::filesystem::create_directories(dir);

    const auto& types = type_universe();
    std::map<std::string, std::string> type_labels;
    for (const auto& t : types) type_labels[t.id] = t.kg_label;
    for (const auto& [_, extra] : secondary_types()) {
        for (const auto& [id, label] : extra) type_labels[id] = label;
    }

    std::set<std::string> used_labels;
    std::map<std::string, std::vector<GenEntity>> pools;
    std::vector<std::string> countries;
    std::uint32_t next_id = 100000;
    for (const auto& t : types) {
        auto& pool = pools[t.id];
        for (int i = 0; i < 24; ++i) {
            GenEntity e;
            e.id = "Q" + std::to_string(next_id++);
            do {
                e.label = make_name(rng);
            } while (!used_labels.insert(e.label).second);
            if (rng.chance(40)) {
                const auto space = e.label.find(' ');
                e.alias = space == std::string::npos ? e.label.substr(0, 3) + "." : e.label.substr(0, space);
            }
            e.types.push_back(t.id);
            if (const auto it = secondary_types().find(t.id); it != secondary_types().end() && rng.chance(30)) {
                e.types.push_back(rng.pick(it->second).first);
            }
            if (t.id == "Q6256") countries.push_back(e.id);
            pool.push_back(std::move(e));
        }
    }

    FixtureBundle bundle;
    bundle.seed = seed;
    bundle.n_tables = n_tables;
    bundle.snapshot = dir / "kg.tsv";
    bundle.dataset = dir / "tables.jsonl";
    bundle.vocabulary = dir / "types.txt";
    bundle.llm_lookup = dir / "mock.json";
    bundle.expected_report = dir / "expected_report.json";

    {
        std::ofstream kg(bundle.snapshot, std::ios::binary | std::ios::trunc);
        kg << "# generated fixture KG, seed " << seed << "\n";
        for (const auto& [id, label] : type_labels) kg << "L\t" << id << '\t' << label << '\n';
        for (const auto& t : types) {
            for (const auto& e : pools[t.id]) {
                kg << "L\t" << e.id << '\t' << e.label << '\n';
                if (!e.alias.empty()) kg << "A\t" << e.id << '\t' << e.alias << '\n';
                for (const auto& type : e.types) kg << "T\t" << e.id << "\tP31\t" << type << '\n';
                if (t.id != "Q6256" && rng.chance(50)) kg << "T\t" << e.id << "\tP17\t" << rng.pick(countries) << '\n';
            }
        }
    }

    {
        std::ofstream out(bundle.dataset, std::ios::binary | std::ios::trunc);
        for (std::size_t ti = 0; ti < n_tables; ++ti) {
            const std::uint32_t n_rows = rng.between(18, 24);
            const std::uint32_t n_entity_cols = rng.between(3, 5);
            const bool numeric_col = rng.chance(50);
            const std::uint32_t n_cols = n_entity_cols + (numeric_col ? 1 : 0);
            const std::uint32_t numeric_at = numeric_col ? rng.below(n_cols) : n_cols;

            std::vector<std::string> col_types;
            while (col_types.size() < n_entity_cols) {
                const auto& t = rng.pick(types);
                if (std::find(col_types.begin(), col_types.end(), t.id) == col_types.end()) col_types.push_back(t.id);
            }

            nlohmann::ordered_json rec;
            rec["table_id"] = "t" + std::to_string(seed) + "_" + std::to_string(ti);
            rec["n_rows"] = n_rows;
            rec["n_cols"] = n_cols;
            auto cells = nlohmann::ordered_json::array();
            auto gold_labels = nlohmann::ordered_json::object();
            std::size_t entity_idx = 0;
            for (std::uint32_t c = 0; c < n_cols; ++c) {
                if (c == numeric_at) {
                    for (std::uint32_t r = 0; r < n_rows; ++r) {
                        cells.push_back({{"row", r}, {"col", c}, {"text", std::to_string(rng.between(1890, 2020))},
                                         {"gold_entity", nullptr}});
                    }
                    continue;
                }
                const std::string& type_id = col_types[entity_idx++];
                const TypeSpec* spec = nullptr;
                for (const auto& t : types) {
                    if (t.id == type_id) spec = &t;
                }
                const bool unlinked_column = rng.chance(8);
                for (std::uint32_t r = 0; r < n_rows; ++r) {
                    if (rng.chance(5)) continue; // empty cell
                    const auto& e = rng.pick(pools[type_id]);
                    std::string text = e.label;
                    const auto roll = rng.below(100);
                    if (roll < 20 && !e.alias.empty()) {
                        text = e.alias;
                    } else if (roll >= 90) {
                        text = e.label.substr(0, e.label.size() - 1);
                    }
                    const bool gold = !unlinked_column && !rng.chance(5);
                    cells.push_back({{"row", r}, {"col", c}, {"text", text},
                                     {"gold_entity", gold ? nlohmann::ordered_json(e.id) : nlohmann::ordered_json(nullptr)}});
                }
                if (rng.chance(90)) gold_labels[std::to_string(c)] = spec->gold;
            }
            rec["cells"] = std::move(cells);
            rec["gold_labels"] = std::move(gold_labels);
            out << rec.dump() << '\n';
        }
    }

    std::vector<std::string> vocab;
    auto add_vocab = [&](const std::string& label) {
        if (std::find(vocab.begin(), vocab.end(), label) == vocab.end()) vocab.push_back(label);
    };
    for (const auto& t : types) {
        for (const auto& g : t.gold) add_vocab(g);
        add_vocab(t.mock_answer);
    }
    for (const auto& extra : extra_vocabulary()) add_vocab(extra);
    {
        std::ofstream out(bundle.vocabulary, std::ios::binary | std::ios::trunc);
        for (const auto& v : vocab) out << v << '\n';
    }

    {
        nlohmann::ordered_json lookup = nlohmann::ordered_json::object();
        for (const auto& t : types) lookup[t.kg_label] = t.mock_answer;
        lookup["athlete"] = "sports.pro_athlete";
        lookup["politician"] = "government.politician";
        lookup["big city"] = "location.citytown";
        nlohmann::ordered_json doc;
        doc["lookup"] = std::move(lookup);
        doc["default"] = std::vector<std::string>{"location.location"};
        std::ofstream out(bundle.llm_lookup, std::ios::binary | std::ios::trunc);
        out << doc.dump(2) << '\n';
    }

    {
        nlohmann::ordered_json m;
        m["seed"] = seed;
        m["n_tables"] = n_tables;
        m["snapshot"] = bundle.snapshot.filename().string();
        m["dataset"] = bundle.dataset.filename().string();
        m["vocabulary"] = bundle.vocabulary.filename().string();
        m["llm_lookup"] = bundle.llm_lookup.filename().string();
        m["expected_report"] = bundle.expected_report.filename().string();
        const ExpectedRun run;
        m["expected_run"] = {{"linker", run.linker},         {"context", run.context},
                             {"mode", run.mode},             {"top_k", run.top_k},
                             {"fallback_policy", run.fallback_policy}, {"instance_of", run.instance_of},
                             {"llm", "mock:" + bundle.llm_lookup.filename().string()}};
        std::ofstream out(dir / manifest_name, std::ios::binary | std::ios::trunc);
        out << m.dump(2) << '\n';
    }
    return bundle;
}

} // namespace racoon::fixtures
