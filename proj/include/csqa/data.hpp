#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace csqa {

inline constexpr int kNumChoices = 5;
inline constexpr std::array<char, kNumChoices> kChoiceLabels = {'A', 'B', 'C', 'D', 'E'};

struct Choice {
    char label = '?';
    std::string text;

    bool operator==(const Choice&) const = default;
};

// One multiple-choice question: a stem and five labeled candidates A-E.
struct QuestionRecord {
    std::string id;
    std::string stem;
    std::string question_concept;  // optional topic hint, may be empty
    std::vector<Choice> choices;
    std::optional<char> answer_key;

    bool operator==(const QuestionRecord&) const = default;
};

enum class SplitName { Train, Dev, Test };

std::string to_string(SplitName name);
SplitName split_name_from_string(std::string_view s);

// Whether records of this split must carry a gold answer key.
inline bool split_has_keys(SplitName name) { return name != SplitName::Test; }

struct DatasetSplit {
    SplitName name = SplitName::Train;
    std::vector<QuestionRecord> records;
    std::string source_path;
};

// Enforces the record contract: exactly five choices labeled A-E in order,
// non-empty texts, answer key (when present) among the labels.
// Throws ParseError with the offending id on violation.
void validate_record(const QuestionRecord& record);

// Loads a line-delimited record file. Each line is one JSON object with
// fields id, question.stem, question.question_concept,
// question.choices[] = {label, text}, and answerKey (train/dev only).
// File order is preserved; an empty file yields an empty split and a
// warning on stderr. Throws ParseError naming the line or record at fault.
DatasetSplit load_split(const std::filesystem::path& path, SplitName name);

// Writes the same line-delimited format back; load(save(s)) == s.
void save_split(const DatasetSplit& split, const std::filesystem::path& path);
std::string record_to_line(const QuestionRecord& record);

struct CountReport {
    std::string split;
    size_t observed = 0;
    size_t expected = 0;
    bool pass = false;
};

// Never throws; a wrong count is a report outcome, not an error.
CountReport validate_counts(const DatasetSplit& split, size_t expected);

std::string to_string(const CountReport& report);

// Published split sizes for the standard train/dev/test files.
inline constexpr size_t kOfficialTrainCount = 9741;
inline constexpr size_t kOfficialDevCount = 1221;
inline constexpr size_t kOfficialTestCount = 1140;

}  // namespace csqa
