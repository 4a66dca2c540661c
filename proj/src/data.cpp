#include "csqa/data.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include <json.hpp>

#include "csqa/errors.hpp"
#include "csqa/text.hpp"

namespace csqa {

using ordered_json = nlohmann::ordered_json;

std::string to_string(SplitName name) {
    switch (name) {
        case SplitName::Train: return "train";
        case SplitName::Dev: return "dev";
        case SplitName::Test: return "test";
    }
    return "?";
}

SplitName split_name_from_string(std::string_view s) {
    if (s == "train") return SplitName::Train;
    if (s == "dev") return SplitName::Dev;
    if (s == "test") return SplitName::Test;
    throw ParseError("unknown split name '" + std::string(s) + "' (expected train, dev, or test)");
}

void validate_record(const QuestionRecord& record) {
    auto fail = [&](const std::string& why) {
        throw ParseError("record '" + (record.id.empty() ? std::string("<no id>") : record.id) + "': " + why);
    };
    if (record.id.empty()) fail("missing id");
    if (trim(record.stem).empty()) fail("empty question stem");
    if (record.choices.size() != static_cast<size_t>(kNumChoices))
        fail("expected 5 choices, got " + std::to_string(record.choices.size()));
    for (int i = 0; i < kNumChoices; ++i) {
        const Choice& c = record.choices[static_cast<size_t>(i)];
        if (c.label != kChoiceLabels[static_cast<size_t>(i)])
            fail(std::string("choice labels must be A-E in order; position ") + std::to_string(i) +
                 " has label '" + c.label + "'");
        if (trim(c.text).empty()) fail(std::string("choice ") + c.label + " has empty text");
    }
    if (record.answer_key) {
        char k = *record.answer_key;
        if (k < 'A' || k > 'E') fail(std::string("answer key '") + k + "' is not one of A-E");
    }
}

namespace {

char normalize_label(const std::string& raw, const std::string& id) {
    std::string t(trim(raw));
    if (t.size() != 1)
        throw ParseError("record '" + id + "': label '" + raw + "' is not a single letter");
    return static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
}

QuestionRecord record_from_json(const ordered_json& j) {
    QuestionRecord rec;
    rec.id = j.at("id").get<std::string>();
    const auto& q = j.at("question");
    rec.stem = q.at("stem").get<std::string>();
    if (q.contains("question_concept") && q["question_concept"].is_string())
        rec.question_concept = q["question_concept"].get<std::string>();
    for (const auto& cj : q.at("choices")) {
        Choice c;
        c.label = normalize_label(cj.at("label").get<std::string>(), rec.id);
        c.text = cj.at("text").get<std::string>();
        rec.choices.push_back(std::move(c));
    }
    if (j.contains("answerKey")) {
        std::string raw = j["answerKey"].get<std::string>();
        rec.answer_key = normalize_label(raw, rec.id);
    }
    return rec;
}

}  // namespace

DatasetSplit load_split(const std::filesystem::path& path, SplitName name) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file: " + path.string());

    DatasetSplit split;
    split.name = name;
    split.source_path = path.string();

    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        QuestionRecord rec;
        try {
            rec = record_from_json(ordered_json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
        }
        validate_record(rec);
        if (!seen_ids.insert(rec.id).second)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": duplicate id '" + rec.id + "'");
        if (split_has_keys(name) && !rec.answer_key)
            throw ParseError("record '" + rec.id + "': missing answerKey in " + to_string(name) + " split");
        if (!split_has_keys(name) && rec.answer_key)
            throw ParseError("record '" + rec.id + "': unexpected answerKey in test split");
        split.records.push_back(std::move(rec));
    }
    if (split.records.empty())
        std::cerr << "warning: " << path.string() << " contains no records\n";
    return split;
}

std::string record_to_line(const QuestionRecord& record) {
    ordered_json q;
    q["question_concept"] = record.question_concept;
    ordered_json choices = ordered_json::array();
    for (const Choice& c : record.choices)
        choices.push_back({{"label", std::string(1, c.label)}, {"text", c.text}});
    q["choices"] = choices;
    q["stem"] = record.stem;

    ordered_json j;
    if (record.answer_key) j["answerKey"] = std::string(1, *record.answer_key);
    j["id"] = record.id;
    j["question"] = q;
    return j.dump();
}

void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write data file: " + path.string());
    for (const QuestionRecord& rec : split.records) out << record_to_line(rec) << "\n";
    if (!out) throw SemanticError("write failed: " + path.string());
}

CountReport validate_counts(const DatasetSplit& split, size_t expected) {
    CountReport r;
    r.split = to_string(split.name);
    r.observed = split.records.size();
    r.expected = expected;
    r.pass = r.observed == r.expected;
    return r;
}

std::string to_string(const CountReport& report) {
    if (report.pass)
        return report.split + ": pass (" + std::to_string(report.observed) + " records)";
    return report.split + ": FAIL (expected " + std::to_string(report.expected) + ", observed " +
           std::to_string(report.observed) + ")";
}

}  // namespace csqa
