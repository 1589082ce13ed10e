#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "racoon/tabular.hpp"
#include "test_support.hpp"

using namespace racoon;
using racoon::testing::make_table;

namespace {

std::vector<Table> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_dataset(in);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(LoadDataset, TwoByTwoWithLabel) {
    const auto tables = parse(
        R"({"table_id":"t1","n_rows":2,"n_cols":2,"cells":[{"row":0,"col":0,"text":"Ada","gold_entity":"Q7259"},)"
        R"({"row":0,"col":1,"text":"London","gold_entity":null},{"row":1,"col":0,"text":"Alan","gold_entity":"Q7251"},)"
        R"({"row":1,"col":1,"text":"Wilmslow","gold_entity":null}],"gold_labels":{"0":["people.person"]}})"
        "\n");
    ASSERT_EQ(tables.size(), 1u);
    const Table& t = tables[0];
    EXPECT_EQ(t.table_id, "t1");
    EXPECT_EQ(t.gold_labels.at(0), std::set<std::string>{"people.person"});
    EXPECT_EQ(t.cell(1, 0).text, "Alan");
    EXPECT_EQ(t.cell(0, 0).gold_entity, "Q7259");
    EXPECT_FALSE(t.cell(0, 1).gold_entity);
}

TEST(LoadDataset, MissingCellsBecomeEmpty) {
    const auto tables = parse(R"({"table_id":"t","n_rows":2,"n_cols":3,"cells":[{"row":1,"col":2,"text":"x"}]})");
    const Table& t = tables.at(0);
    ASSERT_EQ(t.cells.size(), 6u);
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_EQ(t.cell(r, c).row, r);
            EXPECT_EQ(t.cell(r, c).col, c);
        }
    }
    EXPECT_EQ(t.cell(1, 2).text, "x");
    EXPECT_EQ(t.cell(0, 0).text, "");
    EXPECT_TRUE(t.gold_labels.empty());
}

TEST(LoadDataset, ColumnOutOfRangeNamesRecord) {
    const auto err = error_of(R"({"table_id":"bad","n_rows":1,"n_cols":2,"cells":[{"row":0,"col":5,"text":"x"}]})");
    EXPECT_NE(err.find("bad"), std::string::npos) << err;
    EXPECT_NE(err.find("cells[0]"), std::string::npos) << err;
    EXPECT_NE(err.find("'col'"), std::string::npos) << err;
}

TEST(LoadDataset, DuplicateTableId) {
    const std::string rec = R"({"table_id":"dup","n_rows":0,"n_cols":0,"cells":[]})";
    const auto err = error_of(rec + "\n" + rec + "\n");
    EXPECT_NE(err.find("duplicate table_id"), std::string::npos) << err;
    EXPECT_NE(err.find("dup"), std::string::npos) << err;
}

TEST(LoadDataset, MalformedRecordsAreErrors) {
    EXPECT_NE(error_of("not json").find("line 1"), std::string::npos);
    EXPECT_NE(error_of(R"({"n_rows":1,"n_cols":1,"cells":[]})").find("'table_id'"), std::string::npos);
    EXPECT_NE(error_of(R"({"table_id":"t","n_rows":1,"n_cols":1,"cells":[{"row":0,"col":0}]})").find("'text'"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"table_id":"t","n_rows":1,"n_cols":1,"cells":[{"row":0,"col":0,"text":"a","gold_entity":""}]})")
                  .find("'gold_entity'"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"table_id":"t","n_rows":1,"n_cols":1,"cells":[{"row":0,"col":0,"text":"a"},{"row":0,"col":0,"text":"b"}]})")
                  .find("duplicate cell"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"table_id":"t","n_rows":1,"n_cols":1,"cells":[],"gold_labels":{"3":["a"]}})").find("gold_labels"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"table_id":"t","n_rows":1,"n_cols":1,"cells":[],"gold_labels":{"0":[""]}})").find("gold_labels"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"table_id":"t","n_rows":-1,"n_cols":1,"cells":[]})").find("n_rows"), std::string::npos);
}

TEST(LoadDataset, EmptyLabelListMeansUnlabeled) {
    const auto tables = parse(R"({"table_id":"t","n_rows":1,"n_cols":2,"cells":[],"gold_labels":{"1":[]}})");
    EXPECT_TRUE(tables.at(0).gold_labels.empty());
}

TEST(LoadDataset, MissingFileIsError) {
    EXPECT_THROW(load_dataset("/nonexistent/racoon/tables.jsonl"), ParseError);
}

TEST(LoadDataset, BundleGridsMatchDeclaredDimensions) {
    const auto path = racoon::testing::data_dir() / "bundle_seed7" / "tables.jsonl";
    const auto tables = load_dataset(path);
    // Independent reading of the same file: one table per non-empty line.
    std::istringstream lines(racoon::testing::read_file(path));
    std::string line;
    std::vector<nlohmann::json> raw;
    while (std::getline(lines, line)) {
        if (!line.empty()) raw.push_back(nlohmann::json::parse(line));
    }
    ASSERT_EQ(raw.size(), 10u);
    ASSERT_EQ(tables.size(), raw.size());
    double rows = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        EXPECT_EQ(tables[i].table_id, raw[i]["table_id"].get<std::string>());
        EXPECT_EQ(tables[i].n_rows, raw[i]["n_rows"].get<std::size_t>());
        EXPECT_EQ(tables[i].n_cols, raw[i]["n_cols"].get<std::size_t>());
        EXPECT_EQ(tables[i].cells.size(), tables[i].n_rows * tables[i].n_cols);
        rows += static_cast<double>(tables[i].n_rows);
    }
    EXPECT_NEAR(rows / 10.0, 21.0, 3.0);
}

TEST(LoadDataset, RoundTripIsLossless) {
    const auto tables = load_dataset(racoon::testing::data_dir() / "bundle_seed7" / "tables.jsonl");
    std::ostringstream out;
    write_dataset(tables, out);
    EXPECT_EQ(parse(out.str()), tables);

    Table odd = make_table("odd", {{"x,\"y", ""}, {"line\nbreak", "\xC3\xA9"}});
    odd.cells[1].gold_entity = "Q1";
    odd.gold_labels[0] = {"a", "b"};
    std::ostringstream out2;
    write_dataset({odd}, out2);
    EXPECT_EQ(parse(out2.str()).at(0), odd);
}

TEST(LoadVocabulary, FileOrder) {
    std::istringstream in("a\nb\r\nc\n");
    const auto vocab = parse_vocabulary(in);
    EXPECT_EQ(vocab.labels(), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_TRUE(vocab.contains("b"));
    EXPECT_FALSE(vocab.contains("d"));
}

TEST(LoadVocabulary, DuplicateIsError) {
    std::istringstream in("time.event\npeople.person\ntime.event\n");
    EXPECT_THROW(parse_vocabulary(in), ParseError);
}

TEST(LoadVocabulary, EmptyIsError) {
    std::istringstream in("");
    EXPECT_THROW(parse_vocabulary(in), ParseError);
    std::istringstream blank("\n\n");
    EXPECT_THROW(parse_vocabulary(blank), ParseError);
}

TEST(LoadVocabulary, FullSizeFixture) {
    EXPECT_EQ(load_vocabulary(racoon::testing::data_dir() / "prompt" / "types255.txt").size(), 255u);
}

TEST(ColumnQuery, TargetMustBeInRange) {
    const Table t = make_table("t", {{"a", "b"}});
    EXPECT_NO_THROW(ColumnQuery(t, 1));
    EXPECT_THROW(ColumnQuery(t, 2), UsageError);
}

TEST(SerializeCsv, IdentityAndSwap) {
    const Table t = make_table("t", {{"a", "b"}, {"c", "d"}});
    EXPECT_EQ(serialize_table_csv(ColumnQuery(t, 0)), "a,b\nc,d");
    EXPECT_EQ(serialize_table_csv(ColumnQuery(t, 1)), "b,a\nd,c");
}

TEST(SerializeCsv, QuotesSpecialFields) {
    const Table t = make_table("t", {{"x,\"y", "plain"}});
    EXPECT_EQ(serialize_table_csv(ColumnQuery(t, 0)), "\"x,\"\"y\",plain");
    EXPECT_EQ(csv_field("a\nb"), "\"a\nb\"");
    EXPECT_EQ(csv_field(""), "");
}

TEST(SerializeCsv, EmptyCellsStayAsEmptyFields) {
    const Table t = make_table("t", {{"a", "", "c"}});
    EXPECT_EQ(serialize_table_csv(ColumnQuery(t, 2)), "c,a,");
}

namespace {

// Reference CSV writer: plain loops over an explicit column order.
std::string reference_csv(const Table& t, std::size_t k, std::size_t rows) {
    std::vector<std::size_t> order{k};
    for (std::size_t c = 0; c < t.n_cols; ++c) {
        if (c != k) order.push_back(c);
    }
    std::string out;
    for (std::size_t r = 0; r < rows; ++r) {
        std::string line;
        for (std::size_t i = 0; i < order.size(); ++i) {
            std::string f = t.cells[r * t.n_cols + order[i]].text;
            if (f.find(',') != std::string::npos || f.find('"') != std::string::npos) {
                std::string q = "\"";
                for (char ch : f) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                f = q + "\"";
            }
            line += (i ? "," : "") + f;
        }
        out += (r ? "\n" : "") + line;
    }
    return out;
}

} // namespace

TEST(SerializeCsv, RotationAndRowCapProperties) {
    std::mt19937 rng(1234);
    const std::vector<std::string> words{"a", "b,c", "q\"t", "", "long words here", "x"};
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t rows = rng() % 8;
        const std::size_t cols = 1 + rng() % 5;
        std::vector<std::vector<std::string>> grid(rows, std::vector<std::string>(cols));
        for (auto& row : grid) {
            for (auto& cell : row) cell = words[rng() % words.size()];
        }
        Table t = make_table("p", grid);
        t.n_cols = cols;
        const std::size_t k = rng() % cols;
        const std::optional<std::size_t> cap =
            rng() % 2 ? std::optional<std::size_t>(rng() % 10) : std::nullopt;
        const std::size_t expect_rows = cap ? std::min(rows, *cap) : rows;

        const std::string csv = serialize_table_csv(ColumnQuery(t, k), cap);
        EXPECT_EQ(csv, reference_csv(t, k, expect_rows));
        const auto newlines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
        EXPECT_EQ(expect_rows == 0 ? (csv.empty() ? 0 : newlines + 1) : newlines + 1, expect_rows);

        // Column k's field leads every line.
        std::istringstream lines(csv);
        std::string line;
        for (std::size_t r = 0; r < expect_rows && std::getline(lines, line); ++r) {
            const std::string lead = csv_field(t.cell(r, k).text);
            EXPECT_EQ(line.substr(0, lead.size()), lead);
            if (cols > 1) {
                EXPECT_EQ(line[lead.size()], ',');
            }
        }
    }
}
