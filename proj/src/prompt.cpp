#include "csqa/prompt.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "csqa/errors.hpp"
#include "csqa/text.hpp"

namespace csqa {

std::string render_prompt(std::string_view stem, std::string_view answer, const PromptOptions& options) {
    if (trim(stem).empty()) throw std::invalid_argument("render_prompt: empty stem");
    if (trim(answer).empty()) throw std::invalid_argument("render_prompt: empty answer");

    std::string out;
    out.reserve(stem.size() + options.separator.size() + answer.size() + 3);
    out += stem;
    out += ' ';
    out += options.separator;
    out += ' ';

    std::string ans(answer);
    if (options.capitalize_answer)
        ans[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(ans[0])));
    out += ans;

    char last = ans.back();
    if (options.append_period && last != '.' && last != '?' && last != '!') out += '.';
    return out;
}

std::string render_prompt(std::string_view stem, std::string_view answer, std::string_view separator) {
    PromptOptions options;
    options.separator = std::string(separator);
    return render_prompt(stem, answer, options);
}

std::vector<CandidatePrompt> expand_question(const QuestionRecord& record, const PromptOptions& options) {
    validate_record(record);
    if (record.stem.find(options.separator) != std::string::npos)
        throw ParseError("record '" + record.id + "': stem contains the separator literal \"" +
                         options.separator + "\"");

    std::vector<CandidatePrompt> prompts;
    prompts.reserve(kNumChoices);
    for (int i = 0; i < kNumChoices; ++i) {
        const Choice& choice = record.choices[static_cast<size_t>(i)];
        if (choice.text.find(options.separator) != std::string::npos)
            throw ParseError("record '" + record.id + "': choice " + choice.label +
                             " contains the separator literal \"" + options.separator + "\"");
        CandidatePrompt p;
        p.question_id = record.id;
        p.candidate_index = i;
        p.label = choice.label;
        p.text = render_prompt(record.stem, choice.text, options);
        if (record.answer_key) p.is_gold = (*record.answer_key == choice.label);
        prompts.push_back(std::move(p));
    }
    return prompts;
}

void dump_prompts(const DatasetSplit& split, const std::filesystem::path& path, const PromptOptions& options) {
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write prompt dump: " + path.string());
    for (const QuestionRecord& rec : split.records)
        for (const CandidatePrompt& p : expand_question(rec, options))
            out << p.question_id << '\t' << p.label << '\t' << p.text << '\n';
    if (!out) throw SemanticError("write failed: " + path.string());
}

}  // namespace csqa
