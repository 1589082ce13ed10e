#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "racoon/eval.hpp"
#include "test_support.hpp"

using namespace racoon;
using racoon::testing::TempDir;

namespace {

ColumnRecord rec(std::set<std::string> gold, std::vector<std::string> predicted, std::size_t col = 0) {
    ColumnRecord r;
    r.table_id = "t";
    r.col = col;
    r.gold = std::move(gold);
    r.predicted = std::move(predicted);
    r.parse_ok = true;
    return r;
}

} // namespace

TEST(MicroF1Multi, Perfect) {
    const std::vector<ColumnRecord> r{rec({"a", "b"}, {"a", "b"})};
    const auto rep = micro_f1_multi(r);
    EXPECT_EQ(rep.micro_f1, 1.0);
    EXPECT_EQ(rep.tp, 2u);
    EXPECT_EQ(rep.fp + rep.fn, 0u);
}

TEST(MicroF1Multi, TwoColumnHandCase) {
    const std::vector<ColumnRecord> r{rec({"a", "b"}, {"a"}, 0), rec({"c"}, {"c", "d"}, 1)};
    const auto rep = micro_f1_multi(r);
    EXPECT_EQ(rep.tp, 2u);
    EXPECT_EQ(rep.fp, 1u);
    EXPECT_EQ(rep.fn, 1u);
    EXPECT_NEAR(rep.micro_f1, 0.6667, 1e-4);
    EXPECT_NEAR(rep.micro_f1, 4.0 / 6.0, 1e-12);
}

TEST(MicroF1Multi, AllEmptyPredictions) {
    const std::vector<ColumnRecord> r{rec({"a"}, {}), rec({"b", "c"}, {})};
    const auto rep = micro_f1_multi(r);
    EXPECT_EQ(rep.micro_f1, 0.0);
    EXPECT_EQ(rep.fn, 3u);
}

TEST(MicroF1Multi, EmptyInputIsError) { EXPECT_THROW(micro_f1_multi({}), UsageError); }

TEST(MicroF1Multi, DuplicatesAndPermutationInvariant) {
    std::mt19937 rng(17);
    const std::vector<std::string> pool{"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ColumnRecord> records;
        const std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) {
            std::set<std::string> gold{pool[rng() % pool.size()]};
            if (rng() % 2) gold.insert(pool[rng() % pool.size()]);
            std::vector<std::string> pred;
            for (std::size_t k = rng() % 4; k > 0; --k) pred.push_back(pool[rng() % pool.size()]);
            records.push_back(rec(gold, pred, i));
        }
        const auto base = micro_f1_multi(records);
        EXPECT_GE(base.micro_f1, 0.0);
        EXPECT_LE(base.micro_f1, 1.0);
        EXPECT_EQ(base.micro_f1 == 1.0, base.fp == 0 && base.fn == 0);
        EXPECT_EQ(base.micro_f1, micro_f1(base.tp, base.fp, base.fn));

        auto shuffled = records;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto s = micro_f1_multi(shuffled);
        EXPECT_EQ(std::tie(s.tp, s.fp, s.fn, s.micro_f1), std::tie(base.tp, base.fp, base.fn, base.micro_f1));

        auto doubled = records;
        for (auto& r : doubled) {
            const auto copy = r.predicted;
            r.predicted.insert(r.predicted.end(), copy.begin(), copy.end());
        }
        const auto d = micro_f1_multi(doubled);
        EXPECT_EQ(std::tie(d.tp, d.fp, d.fn, d.micro_f1), std::tie(base.tp, base.fp, base.fn, base.micro_f1));
    }
}

TEST(MicroF1Single, RemapRule) {
    const std::vector<ColumnRecord> in_set{rec({"a", "b"}, {"a"})};
    const auto r1 = micro_f1_single(in_set);
    EXPECT_EQ(std::tie(r1.tp, r1.fp, r1.fn), std::make_tuple(std::size_t{1}, std::size_t{0}, std::size_t{0}));

    const std::vector<ColumnRecord> out_of_set{rec({"a"}, {"d"})};
    const auto r2 = micro_f1_single(out_of_set);
    EXPECT_EQ(std::tie(r2.tp, r2.fp, r2.fn), std::make_tuple(std::size_t{0}, std::size_t{1}, std::size_t{1}));

    const std::vector<ColumnRecord> empty{rec({"a"}, {})};
    const auto r3 = micro_f1_single(empty);
    EXPECT_EQ(std::tie(r3.tp, r3.fp, r3.fn), std::make_tuple(std::size_t{0}, std::size_t{0}, std::size_t{1}));

    const std::vector<ColumnRecord> multi{rec({"a"}, {"a", "b"})};
    EXPECT_THROW(micro_f1_single(multi), UsageError);
    EXPECT_THROW(micro_f1_single({}), UsageError);
}

TEST(MicroF1Single, ThreeOfFour) {
    const std::vector<ColumnRecord> r{rec({"a"}, {"a"}), rec({"b", "c"}, {"c"}), rec({"d"}, {"d"}), rec({"e"}, {"x"})};
    EXPECT_DOUBLE_EQ(micro_f1_single(r).micro_f1, 0.75);
}

TEST(MicroF1Single, EqualsAccuracyWhenAllPredicted) {
    std::mt19937 rng(3);
    const std::vector<std::string> pool{"a", "b", "c"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ColumnRecord> records;
        std::size_t correct = 0;
        const std::size_t n = 1 + rng() % 10;
        for (std::size_t i = 0; i < n; ++i) {
            std::set<std::string> gold{pool[rng() % 3], pool[rng() % 3]};
            const std::string p = pool[rng() % 3];
            correct += gold.count(p);
            records.push_back(rec(gold, {p}, i));
        }
        EXPECT_NEAR(micro_f1_single(records).micro_f1, static_cast<double>(correct) / static_cast<double>(n), 1e-12);
    }
}

TEST(Report, JsonRoundTripAndNullEl) {
    TempDir dir;
    std::vector<ColumnRecord> records{rec({"a", "b"}, {"a"}, 0), rec({"c"}, {"c", "d"}, 3)};
    records[1].context_kind = ContextKind::entity_labels;
    records[1].fallback_used = true;
    records[0].parse_ok = false;
    auto report = micro_f1_multi(records);
    emit_report(report, dir / "r.json");
    EXPECT_EQ(load_report(dir / "r.json"), report);
    const auto text = racoon::testing::read_file(dir / "r.json");
    EXPECT_NE(text.find("\"el_accuracy\": null"), std::string::npos);
    EXPECT_EQ(text.back(), '\n');

    report.el_accuracy = 0.5;
    emit_report(report, dir / "r2.json");
    EXPECT_EQ(load_report(dir / "r2.json"), report);
}

TEST(Report, StableKeyOrder) {
    const std::vector<ColumnRecord> r{rec({"a"}, {"a"})};
    const auto j = to_json(micro_f1_multi(r));
    std::vector<std::string> keys;
    for (const auto& [k, _] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"mode", "metric", "micro_f1", "el_accuracy", "tp", "fp", "fn", "columns"}));
    std::vector<std::string> col_keys;
    for (const auto& [k, _] : j["columns"][0].items()) col_keys.push_back(k);
    EXPECT_EQ(col_keys, (std::vector<std::string>{"table_id", "col", "gold", "predicted", "context_kind", "fallback_used",
                                                  "parse_ok"}));
}

TEST(Report, MalformedFileIsParseError) {
    TempDir dir;
    racoon::testing::write_file(dir / "bad.json", "{\"mode\": \"multi\"}");
    EXPECT_THROW(load_report(dir / "bad.json"), ParseError);
    racoon::testing::write_file(dir / "bad2.json", "not json");
    EXPECT_THROW(load_report(dir / "bad2.json"), ParseError);
    EXPECT_THROW(emit_report(EvalReport{}, "/nonexistent-dir/r.json"), Error);
}

TEST(MicroF1, ZeroOverZero) { EXPECT_EQ(micro_f1(0, 0, 0), 0.0); }
