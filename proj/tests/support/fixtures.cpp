#include "support/fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csqa/rng.hpp"

namespace csqa::testing {

DatasetSplit make_fixture_split(size_t n, uint64_t seed, SplitName name) {
    Rng rng(seed);
    DatasetSplit split;
    split.name = name;
    split.source_path = "<fixture>";
    for (size_t q = 0; q < n; ++q) {
        QuestionRecord rec;
        rec.id = "q" + std::to_string(seed) + "-" + std::to_string(q);
        rec.stem = "which entry belongs with marker" + std::to_string(q) + " in this collection?";
        rec.question_concept = "marker" + std::to_string(q);
        size_t gold = rng.index(kNumChoices);
        for (size_t c = 0; c < kNumChoices; ++c) {
            Choice choice;
            choice.label = kChoiceLabels[c];
            choice.text = "item" + std::to_string(q) + "x" + std::to_string(c) + " tag" +
                          std::to_string(q * 5 + c) + " code" + std::to_string((q * 31 + c * 7) % 997);
            rec.choices.push_back(choice);
        }
        if (split_has_keys(name)) rec.answer_key = kChoiceLabels[gold];
        split.records.push_back(std::move(rec));
    }
    return split;
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("csqa-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

int run_command(const std::string& command_line, std::string& output, const std::filesystem::path& scratch) {
    static std::atomic<int> counter{0};
    const std::filesystem::path log = scratch / ("cmd-out-" + std::to_string(counter++) + ".log");
    const std::string full = command_line + " > " + log.string() + " 2>&1";
    const int status = std::system(full.c_str());
    output = read_file(log);
    if (status == -1) throw std::runtime_error("failed to launch: " + command_line);
    return WEXITSTATUS(status);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace csqa::testing
