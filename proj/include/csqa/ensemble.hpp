#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "csqa/data.hpp"
#include "csqa/scorer.hpp"

namespace csqa {

enum class AverageMode {
    Logits,         // arithmetic mean of raw candidate scores
    Probabilities,  // mean of per-question softmax distributions
};

AverageMode average_mode_from_string(std::string_view s);

// Per-candidate mean across models. Rows are aligned by question id (all
// inputs must cover the same id set); output rows follow the first
// matrix's order. Per-entry contributions are summed in sorted order, so
// the result is exactly invariant to input permutation.
ScoreMatrix average_scores(std::span<const ScoreMatrix> matrices, AverageMode mode = AverageMode::Logits);

struct PredictionSet {
    std::vector<std::pair<std::string, char>> items;  // (question id, label), input order
    std::vector<std::string> model_ids;               // provenance

    std::optional<char> label_for(const std::string& question_id) const;
};

// Argmax over the five scores; ties break toward the lowest index.
PredictionSet predict(const ScoreMatrix& matrix);

struct ReportRow {
    std::string method;
    std::optional<double> single;    // accuracy fraction
    std::optional<double> ensemble;  // accuracy fraction
};

struct EvalReport {
    std::string split;
    double accuracy = 0.0;
    size_t n_questions = 0;
    std::vector<ReportRow> rows;  // assembled by callers for table rendering
};

// Fraction of gold questions whose predicted label matches the key.
// Every gold id must be present in preds, and the gold split must carry
// answer keys.
EvalReport accuracy(const PredictionSet& preds, const DatasetSplit& gold);

// One line per question: question_id,label — no header, input order.
void export_predictions(const PredictionSet& preds, const std::filesystem::path& path);
PredictionSet parse_predictions(const std::filesystem::path& path);

// Fixed-width Method / Single / Ensemble table; accuracies are shown as
// percentages with one decimal, absent cells as "-". Rows from all
// reports are merged by method name, first appearance order.
std::string render_report(std::span<const EvalReport> reports);

}  // namespace csqa
