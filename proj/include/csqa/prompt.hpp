#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csqa/data.hpp"

namespace csqa {

struct PromptOptions {
    std::string separator = "[SEP]";
    // Both transforms follow the standard rendering "Q [SEP] A." where the
    // answer is shown capitalized and sentence-final. Independently
    // toggleable for ablation.
    bool capitalize_answer = true;
    bool append_period = true;
};

// One question-candidate pair rendered as classifier input.
struct CandidatePrompt {
    std::string question_id;
    int candidate_index = 0;  // 0..4, agrees with label A..E
    char label = 'A';
    std::string text;
    std::optional<bool> is_gold;  // set iff the source record carried a key
};

// "<stem> <separator> <Answer>." with the answer's first character
// uppercased and exactly one terminal period (none added when the answer
// already ends in '.', '?' or '!'). The stem is used verbatim.
// Throws std::invalid_argument on empty stem or answer.
std::string render_prompt(std::string_view stem, std::string_view answer, const PromptOptions& options = {});

// Convenience overload with a bare separator literal.
std::string render_prompt(std::string_view stem, std::string_view answer, std::string_view separator);

// Expands a record into its five candidate prompts in label order A-E.
// Rejects records whose stem or choice texts contain the separator
// literal, so every prompt contains it exactly once.
std::vector<CandidatePrompt> expand_question(const QuestionRecord& record, const PromptOptions& options = {});

// Inspection dump, one prompt per line: question_id<TAB>label<TAB>text.
void dump_prompts(const DatasetSplit& split, const std::filesystem::path& path, const PromptOptions& options = {});

}  // namespace csqa
