#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "csqa/data.hpp"
#include "csqa/errors.hpp"
#include "support/fixtures.hpp"

using namespace csqa;
using csqa::testing::TempDir;
using csqa::testing::make_fixture_split;

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << "\n";
}

const std::string kGoodLine =
    R"({"answerKey": "C", "id": "q1", "question": {"question_concept": "space", "choices": )"
    R"([{"label": "A", "text": "universe"}, {"label": "B", "text": "sky"}, {"label": "C", "text": "orbit"}, )"
    R"({"label": "D", "text": "moon"}, {"label": "E", "text": "belt"}], "stem": "Where can you find all of space?"}})";

}  // namespace

TEST_CASE("single well-formed line loads with gold label C") {
    TempDir dir("data");
    write_lines(dir / "train.jsonl", {kGoodLine});
    DatasetSplit split = load_split(dir / "train.jsonl", SplitName::Train);
    REQUIRE(split.records.size() == 1);
    const QuestionRecord& rec = split.records[0];
    CHECK(rec.id == "q1");
    CHECK(rec.stem == "Where can you find all of space?");
    CHECK(rec.question_concept == "space");
    REQUIRE(rec.answer_key.has_value());
    CHECK(*rec.answer_key == 'C');
    REQUIRE(rec.choices.size() == 5);
    CHECK(rec.choices[0].label == 'A');
    CHECK(rec.choices[4].label == 'E');
    CHECK(rec.choices[0].text == "universe");
}

TEST_CASE("four-choice record is rejected naming the offending id") {
    TempDir dir("data");
    std::string four =
        R"({"answerKey": "A", "id": "bad4", "question": {"question_concept": "x", "choices": )"
        R"([{"label": "A", "text": "a"}, {"label": "B", "text": "b"}, {"label": "C", "text": "c"}, )"
        R"({"label": "D", "text": "d"}], "stem": "only four?"}})";
    write_lines(dir / "train.jsonl", {four});
    try {
        load_split(dir / "train.jsonl", SplitName::Train);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("bad4") != std::string::npos);
        CHECK(std::string(e.what()).find("5 choices") != std::string::npos);
    }
}

TEST_CASE("malformed json line reports the line number") {
    TempDir dir("data");
    write_lines(dir / "train.jsonl", {kGoodLine, "this is not json"});
    try {
        load_split(dir / "train.jsonl", SplitName::Train);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("duplicate ids are rejected") {
    TempDir dir("data");
    write_lines(dir / "train.jsonl", {kGoodLine, kGoodLine});
    CHECK_THROWS_AS(load_split(dir / "train.jsonl", SplitName::Train), ParseError);
}

TEST_CASE("answer key presence must match the split") {
    TempDir dir("data");
    SUBCASE("test split must not have keys") {
        write_lines(dir / "test.jsonl", {kGoodLine});
        CHECK_THROWS_AS(load_split(dir / "test.jsonl", SplitName::Test), ParseError);
    }
    SUBCASE("dev split must have keys") {
        std::string keyless = kGoodLine;
        keyless.replace(keyless.find(R"("answerKey": "C", )"), std::string(R"("answerKey": "C", )").size(), "");
        write_lines(dir / "dev.jsonl", {keyless});
        CHECK_THROWS_AS(load_split(dir / "dev.jsonl", SplitName::Dev), ParseError);
        CHECK_NOTHROW(load_split(dir / "dev.jsonl", SplitName::Test));
    }
}

TEST_CASE("labels are normalized to uppercase") {
    TempDir dir("data");
    std::string lower = kGoodLine;
    size_t pos = 0;
    while ((pos = lower.find("\"label\": \"", pos)) != std::string::npos) {
        pos += std::string("\"label\": \"").size();
        lower[pos] = static_cast<char>(lower[pos] - 'A' + 'a');
    }
    REQUIRE(lower.find("\"label\": \"a\"") != std::string::npos);
    write_lines(dir / "train.jsonl", {lower});
    DatasetSplit split = load_split(dir / "train.jsonl", SplitName::Train);
    CHECK(split.records[0].choices[0].label == 'A');
    CHECK(split.records[0].choices[4].label == 'E');
}

TEST_CASE("out-of-order labels are rejected") {
    QuestionRecord rec = make_fixture_split(1, 7).records[0];
    std::swap(rec.choices[0].label, rec.choices[1].label);
    CHECK_THROWS_AS(validate_record(rec), ParseError);
}

TEST_CASE("whitespace-only texts are rejected") {
    QuestionRecord rec = make_fixture_split(1, 7).records[0];
    SUBCASE("stem") {
        rec.stem = "   ";
        CHECK_THROWS_AS(validate_record(rec), ParseError);
    }
    SUBCASE("choice text") {
        rec.choices[3].text = " \t ";
        CHECK_THROWS_AS(validate_record(rec), ParseError);
    }
}

TEST_CASE("answer key outside A-E is rejected") {
    QuestionRecord rec = make_fixture_split(1, 7).records[0];
    rec.answer_key = 'F';
    CHECK_THROWS_AS(validate_record(rec), ParseError);
}

TEST_CASE("empty file yields an empty split, not an error") {
    TempDir dir("data");
    write_lines(dir / "train.jsonl", {});
    DatasetSplit split = load_split(dir / "train.jsonl", SplitName::Train);
    CHECK(split.records.empty());
    CHECK(split.source_path == (dir / "train.jsonl").string());
}

TEST_CASE("validate_counts: pass, empty-pass, and fail") {
    DatasetSplit dev = make_fixture_split(1221, 3, SplitName::Dev);
    CountReport ok = validate_counts(dev, 1221);
    CHECK(ok.pass);
    CHECK(ok.observed == 1221);
    CHECK(to_string(ok) == "dev: pass (1221 records)");

    DatasetSplit empty;
    empty.name = SplitName::Test;
    CHECK(validate_counts(empty, 0).pass);

    DatasetSplit ten = make_fixture_split(10, 3, SplitName::Test);
    CountReport bad = validate_counts(ten, 1140);
    CHECK_FALSE(bad.pass);
    CHECK(bad.observed == 10);
    CHECK(bad.expected == 1140);
    CHECK(ten.records.size() == 10);  // never mutates
}

TEST_CASE("loading is deterministic and round trips through serialization") {
    TempDir dir("data");
    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        DatasetSplit orig = make_fixture_split(25, seed, SplitName::Dev);
        save_split(orig, dir / "a.jsonl");
        DatasetSplit first = load_split(dir / "a.jsonl", SplitName::Dev);
        DatasetSplit second = load_split(dir / "a.jsonl", SplitName::Dev);
        CHECK(first.records == second.records);
        CHECK(first.records == orig.records);

        save_split(first, dir / "b.jsonl");
        CHECK(csqa::testing::read_file(dir / "a.jsonl") == csqa::testing::read_file(dir / "b.jsonl"));
    }
}

TEST_CASE("test split round trips without answer keys") {
    TempDir dir("data");
    DatasetSplit orig = make_fixture_split(8, 21, SplitName::Test);
    REQUIRE(!orig.records[0].answer_key.has_value());
    save_split(orig, dir / "test.jsonl");
    DatasetSplit loaded = load_split(dir / "test.jsonl", SplitName::Test);
    CHECK(loaded.records == orig.records);
}

TEST_CASE("missing file is a parse error") {
    CHECK_THROWS_AS(load_split("/nonexistent/nope.jsonl", SplitName::Train), ParseError);
}
