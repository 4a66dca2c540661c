#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "csqa/data.hpp"
#include "csqa/scorer.hpp"

namespace csqa::testing {

// Synthetic split with learnable structure: each question has five
// multi-token answers unique to that question, so a tiny model can
// memorize the assignment. Deterministic in (n, seed).
DatasetSplit make_fixture_split(size_t n, uint64_t seed, SplitName name = SplitName::Train);

// Fresh directory under the system temp dir; removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

// Scores a prompt by its length in characters. Untrainable.
class LengthScorer final : public ScorerBackbone {
  public:
    std::string id() const override { return "length"; }
    std::vector<double> score_batch(std::span<const std::string> prompts) const override {
        std::vector<double> out;
        for (const std::string& p : prompts) out.push_back(static_cast<double>(p.size()));
        return out;
    }
};

class ConstantScorer final : public ScorerBackbone {
  public:
    explicit ConstantScorer(double value = 0.0) : value_(value) {}
    std::string id() const override { return "constant"; }
    std::vector<double> score_batch(std::span<const std::string> prompts) const override {
        return std::vector<double>(prompts.size(), value_);
    }

  private:
    double value_ = 0.0;
};

// Runs a CLI command line via the shell; returns the exit code and
// captures stdout+stderr into `output`.
int run_command(const std::string& command_line, std::string& output, const std::filesystem::path& scratch);

std::string read_file(const std::filesystem::path& path);

}  // namespace csqa::testing
