#include "csqa/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "csqa/errors.hpp"
#include "csqa/text.hpp"

namespace csqa {

AverageMode average_mode_from_string(std::string_view s) {
    if (s == "logits") return AverageMode::Logits;
    if (s == "probs" || s == "probabilities") return AverageMode::Probabilities;
    throw ParseError("unknown ensemble mode '" + std::string(s) + "' (expected logits or probs)");
}

namespace {

std::array<double, kNumChoices> softmax_row(const std::array<double, kNumChoices>& scores) {
    double max = *std::max_element(scores.begin(), scores.end());
    std::array<double, kNumChoices> p{};
    double sum = 0.0;
    for (int i = 0; i < kNumChoices; ++i) {
        p[static_cast<size_t>(i)] = std::exp(scores[static_cast<size_t>(i)] - max);
        sum += p[static_cast<size_t>(i)];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::string describe_id_mismatch(const std::set<std::string>& base, const std::set<std::string>& other,
                                 const std::string& base_id, const std::string& other_id) {
    std::vector<std::string> only_base, only_other;
    std::set_difference(base.begin(), base.end(), other.begin(), other.end(), std::back_inserter(only_base));
    std::set_difference(other.begin(), other.end(), base.begin(), base.end(), std::back_inserter(only_other));
    auto preview = [](const std::vector<std::string>& ids) {
        std::string s;
        for (size_t i = 0; i < ids.size() && i < 5; ++i) s += (i ? ", " : "") + ids[i];
        if (ids.size() > 5) s += ", ... (" + std::to_string(ids.size()) + " total)";
        return s;
    };
    std::string msg = "question id sets differ between '" + base_id + "' and '" + other_id + "'";
    if (!only_base.empty()) msg += "; only in '" + base_id + "': " + preview(only_base);
    if (!only_other.empty()) msg += "; only in '" + other_id + "': " + preview(only_other);
    return msg;
}

}  // namespace

ScoreMatrix average_scores(std::span<const ScoreMatrix> matrices, AverageMode mode) {
    if (matrices.empty()) throw std::invalid_argument("average_scores: need at least one matrix");
    for (const ScoreMatrix& m : matrices) validate_matrix(m);

    const ScoreMatrix& first = matrices.front();
    std::set<std::string> base_ids(first.question_ids.begin(), first.question_ids.end());
    std::vector<std::unordered_map<std::string, size_t>> row_of(matrices.size());
    for (size_t mi = 0; mi < matrices.size(); ++mi) {
        const ScoreMatrix& m = matrices[mi];
        std::set<std::string> ids(m.question_ids.begin(), m.question_ids.end());
        if (ids != base_ids)
            throw SemanticError(describe_id_mismatch(base_ids, ids, first.model_id, m.model_id));
        for (size_t r = 0; r < m.question_ids.size(); ++r) row_of[mi][m.question_ids[r]] = r;
    }

    ScoreMatrix out;
    out.model_id = "ensemble-of-" + std::to_string(matrices.size());
    out.question_ids = first.question_ids;
    out.scores.resize(first.scores.size());
    const double inv_k = 1.0 / static_cast<double>(matrices.size());

    std::vector<double> contrib(matrices.size());
    for (size_t r = 0; r < out.question_ids.size(); ++r) {
        const std::string& qid = out.question_ids[r];
        std::vector<std::array<double, kNumChoices>> rows;
        rows.reserve(matrices.size());
        for (size_t mi = 0; mi < matrices.size(); ++mi) {
            const auto& row = matrices[mi].scores[row_of[mi].at(qid)];
            rows.push_back(mode == AverageMode::Logits ? row : softmax_row(row));
        }
        for (int c = 0; c < kNumChoices; ++c) {
            for (size_t mi = 0; mi < matrices.size(); ++mi) contrib[mi] = rows[mi][static_cast<size_t>(c)];
            // Sorted summation: the mean is exactly independent of the
            // order the input matrices were given in.
            std::sort(contrib.begin(), contrib.end());
            double sum = 0.0;
            for (double v : contrib) sum += v;
            out.scores[r][static_cast<size_t>(c)] = sum * inv_k;
        }
    }

    std::string models;
    std::vector<std::string> ids;
    ids.reserve(matrices.size());
    for (const ScoreMatrix& m : matrices) ids.push_back(m.model_id);
    std::sort(ids.begin(), ids.end());
    for (size_t i = 0; i < ids.size(); ++i) models += (i ? "," : "") + ids[i];
    out.meta["models"] = models;
    out.meta["mode"] = mode == AverageMode::Logits ? "logits" : "probs";
    return out;
}

std::optional<char> PredictionSet::label_for(const std::string& question_id) const {
    for (const auto& [qid, label] : items)
        if (qid == question_id) return label;
    return std::nullopt;
}

PredictionSet predict(const ScoreMatrix& matrix) {
    validate_matrix(matrix);
    PredictionSet preds;
    preds.model_ids.push_back(matrix.model_id);
    preds.items.reserve(matrix.question_ids.size());
    for (size_t r = 0; r < matrix.question_ids.size(); ++r) {
        const auto& row = matrix.scores[r];
        int best = 0;
        for (int c = 1; c < kNumChoices; ++c)
            if (row[static_cast<size_t>(c)] > row[static_cast<size_t>(best)]) best = c;
        preds.items.emplace_back(matrix.question_ids[r], static_cast<char>('A' + best));
    }
    return preds;
}

EvalReport accuracy(const PredictionSet& preds, const DatasetSplit& gold) {
    if (gold.records.empty()) throw SemanticError("gold split is empty");
    std::unordered_map<std::string, char> by_id;
    by_id.reserve(preds.items.size());
    for (const auto& [qid, label] : preds.items) by_id[qid] = label;

    size_t correct = 0;
    for (const QuestionRecord& rec : gold.records) {
        if (!rec.answer_key)
            throw SemanticError("question '" + rec.id + "': gold split lacks an answer key");
        auto it = by_id.find(rec.id);
        if (it == by_id.end())
            throw SemanticError("question '" + rec.id + "': no prediction for this gold id");
        if (it->second == *rec.answer_key) ++correct;
    }

    EvalReport report;
    report.split = to_string(gold.name);
    report.n_questions = gold.records.size();
    report.accuracy = static_cast<double>(correct) / static_cast<double>(gold.records.size());
    return report;
}

void export_predictions(const PredictionSet& preds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write predictions: " + path.string());
    for (const auto& [qid, label] : preds.items) out << qid << ',' << label << '\n';
    if (!out) throw SemanticError("write failed: " + path.string());
}

PredictionSet parse_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open predictions: " + path.string());
    PredictionSet preds;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 2)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected question_id,label");
        std::string label(trim(fields[1]));
        if (label.size() != 1 || label[0] < 'A' || label[0] > 'E')
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": label must be one of A-E");
        preds.items.emplace_back(std::string(trim(fields[0])), label[0]);
    }
    return preds;
}

std::string render_report(std::span<const EvalReport> reports) {
    // Merge rows by method, first appearance order; later rows fill cells
    // the earlier ones left empty.
    std::vector<ReportRow> merged;
    for (const EvalReport& report : reports) {
        for (const ReportRow& row : report.rows) {
            auto it = std::find_if(merged.begin(), merged.end(),
                                   [&](const ReportRow& m) { return m.method == row.method; });
            if (it == merged.end()) {
                merged.push_back(row);
            } else {
                if (row.single) it->single = row.single;
                if (row.ensemble) it->ensemble = row.ensemble;
            }
        }
    }

    size_t method_w = std::string("Method").size();
    for (const ReportRow& row : merged) method_w = std::max(method_w, row.method.size());

    auto cell = [](const std::optional<double>& acc) -> std::string {
        if (!acc) return "-";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", *acc * 100.0);
        return buf;
    };

    std::ostringstream out;
    auto line = [&](const std::string& method, const std::string& single, const std::string& ensemble) {
        out << method;
        out << std::string(method_w - method.size() + 2, ' ');
        out << single << std::string(single.size() < 8 ? 8 - single.size() : 1, ' ');
        out << ensemble << '\n';
    };
    line("Method", "Single", "Ensemble");
    for (const ReportRow& row : merged) line(row.method, cell(row.single), cell(row.ensemble));
    return out.str();
}

}  // namespace csqa
