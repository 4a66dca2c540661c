#include "csqa/scorer.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <unordered_set>

#include "csqa/errors.hpp"
#include "csqa/rng.hpp"
#include "csqa/text.hpp"

namespace csqa {

void validate_matrix(const ScoreMatrix& matrix) {
    if (matrix.scores.size() != matrix.question_ids.size())
        throw ParseError("score matrix '" + matrix.model_id + "': " + std::to_string(matrix.question_ids.size()) +
                         " ids but " + std::to_string(matrix.scores.size()) + " rows");
    std::unordered_set<std::string> seen;
    for (size_t i = 0; i < matrix.question_ids.size(); ++i) {
        const std::string& qid = matrix.question_ids[i];
        if (!seen.insert(qid).second)
            throw ParseError("score matrix '" + matrix.model_id + "': duplicate question id '" + qid + "'");
        for (double s : matrix.scores[i])
            if (!std::isfinite(s))
                throw ParseError("score matrix '" + matrix.model_id + "': non-finite score for question '" + qid +
                                 "'");
    }
}

void save_matrix(const ScoreMatrix& matrix, const std::filesystem::path& path) {
    validate_matrix(matrix);
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write score matrix: " + path.string());
    out << matrix.model_id;
    for (const auto& [k, v] : matrix.meta) out << '\t' << k << '=' << v;
    out << '\n';
    for (size_t i = 0; i < matrix.question_ids.size(); ++i) {
        out << matrix.question_ids[i];
        for (double s : matrix.scores[i]) out << '\t' << format_g17(s);
        out << '\n';
    }
    if (!out) throw SemanticError("write failed: " + path.string());
}

namespace {

double parse_score(std::string_view field, const std::string& qid, const std::filesystem::path& path) {
    std::string s(field);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw ParseError(path.string() + ": question '" + qid + "': bad score token '" + s + "'");
    if (!std::isfinite(v))
        throw ParseError(path.string() + ": question '" + qid + "': non-finite score '" + s + "'");
    return v;
}

}  // namespace

ScoreMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open score matrix: " + path.string());

    ScoreMatrix m;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header line");
    auto header = split(line, '\t');
    m.model_id = std::string(header[0]);
    for (size_t i = 1; i < header.size(); ++i) {
        auto kv = header[i];
        size_t eq = kv.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(path.string() + ": malformed meta field '" + std::string(kv) + "'");
        m.meta[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
    }

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split(line, '\t');
        std::string qid(fields[0]);
        if (fields.size() != 1 + kNumChoices)
            throw ParseError(path.string() + ": question '" + qid + "': expected 5 scores, got " +
                             std::to_string(fields.size() - 1));
        std::array<double, kNumChoices> row{};
        for (int c = 0; c < kNumChoices; ++c)
            row[static_cast<size_t>(c)] = parse_score(fields[static_cast<size_t>(c) + 1], qid, path);
        m.question_ids.push_back(std::move(qid));
        m.scores.push_back(row);
    }
    validate_matrix(m);
    return m;
}

std::array<double, kNumChoices> score_question(const ScorerBackbone& backbone, const QuestionRecord& record,
                                               const PromptOptions& options) {
    std::vector<std::string> prompts;
    auto expanded = expand_question(record, options);
    prompts.reserve(expanded.size());
    for (auto& p : expanded) prompts.push_back(std::move(p.text));
    std::vector<double> scores;
    try {
        scores = backbone.score_batch(prompts);
    } catch (const std::exception& e) {
        throw SemanticError("question '" + record.id + "': backbone failure: " + e.what());
    }
    if (scores.size() != static_cast<size_t>(kNumChoices))
        throw SemanticError("question '" + record.id + "': backbone returned " + std::to_string(scores.size()) +
                            " scores for 5 prompts");
    std::array<double, kNumChoices> out{};
    for (int c = 0; c < kNumChoices; ++c) {
        double s = scores[static_cast<size_t>(c)];
        if (!std::isfinite(s))
            throw SemanticError("question '" + record.id + "': backbone produced a non-finite score");
        out[static_cast<size_t>(c)] = s;
    }
    return out;
}

ScoreMatrix score_split(const ScorerBackbone& backbone, const DatasetSplit& split, const PromptOptions& options,
                        const std::string& model_id) {
    ScoreMatrix m;
    m.model_id = model_id.empty() ? backbone.id() : model_id;
    m.meta["backbone"] = backbone.id();
    m.question_ids.reserve(split.records.size());
    m.scores.reserve(split.records.size());
    for (const QuestionRecord& rec : split.records) {
        m.question_ids.push_back(rec.id);
        m.scores.push_back(score_question(backbone, rec, options));
    }
    return m;
}

// ---------------------------------------------------------------------------
// ReferenceTinyScorer

ReferenceTinyScorer::ReferenceTinyScorer(uint64_t seed, const TinyScorerOptions& options)
    : options_(options), seed_(seed) {
    if (options_.vocab_dim < 1 || options_.embed_dim < 1)
        throw std::invalid_argument("tiny scorer: vocab_dim and embed_dim must be >= 1");
    const size_t vocab = static_cast<size_t>(options_.vocab_dim);
    const size_t dim = static_cast<size_t>(options_.embed_dim);
    params_.assign(vocab * dim + dim + 1, 0.0);

    // Embeddings: small random values, seeded per model so ensemble members
    // start from different states. Head: a fixed unit-norm direction, so
    // the embedding table (which has the capacity) trains from step one
    // while initial scores stay near zero.
    Rng rng(seed);
    for (size_t i = 0; i < vocab * dim; ++i)
        params_[i] = rng.uniform(-options_.init_scale, options_.init_scale);
    const double head = 1.0 / std::sqrt(static_cast<double>(dim));
    for (size_t d = 0; d < dim; ++d) params_[vocab * dim + d] = head;
    params_[vocab * dim + dim] = 0.0;  // bias
}

std::string ReferenceTinyScorer::id() const {
    return "tiny-v" + std::to_string(options_.vocab_dim) + "-d" + std::to_string(options_.embed_dim);
}

std::vector<int> ReferenceTinyScorer::buckets(std::string_view text) const {
    std::vector<int> out;
    for (std::string_view tok : tokenize(text))
        out.push_back(static_cast<int>(hash_token(tok, options_.hash_seed) %
                                       static_cast<uint64_t>(options_.vocab_dim)));
    return out;
}

double ReferenceTinyScorer::score_one(std::string_view text) const {
    const size_t vocab = static_cast<size_t>(options_.vocab_dim);
    const size_t dim = static_cast<size_t>(options_.embed_dim);
    const double* emb = params_.data();
    const double* w = params_.data() + vocab * dim;
    const double bias = params_[vocab * dim + dim];

    std::vector<int> ids = buckets(text);
    double dot = 0.0;
    if (!ids.empty()) {
        for (int k : ids) {
            const double* row = emb + static_cast<size_t>(k) * dim;
            for (size_t d = 0; d < dim; ++d) dot += w[d] * row[d];
        }
        dot /= static_cast<double>(ids.size());
    }
    return options_.score_gain * (dot + bias);
}

std::vector<double> ReferenceTinyScorer::score_batch(std::span<const std::string> prompts) const {
    std::vector<double> out;
    out.reserve(prompts.size());
    for (const std::string& p : prompts) out.push_back(score_one(p));
    return out;
}

void ReferenceTinyScorer::accumulate_score_gradient(std::span<const std::string> prompts,
                                                    std::span<const double> upstream,
                                                    std::span<double> grad) const {
    if (prompts.size() != upstream.size())
        throw std::invalid_argument("tiny scorer: upstream size must match prompt count");
    if (grad.size() != params_.size())
        throw std::invalid_argument("tiny scorer: gradient buffer has wrong size");

    const size_t vocab = static_cast<size_t>(options_.vocab_dim);
    const size_t dim = static_cast<size_t>(options_.embed_dim);
    const double* emb = params_.data();
    const double* w = params_.data() + vocab * dim;
    double* gemb = grad.data();
    double* gw = grad.data() + vocab * dim;
    double* gbias = grad.data() + vocab * dim + dim;

    for (size_t i = 0; i < prompts.size(); ++i) {
        const double u = options_.score_gain * upstream[i];
        *gbias += u;
        std::vector<int> ids = buckets(prompts[i]);
        if (ids.empty()) continue;
        const double inv_n = 1.0 / static_cast<double>(ids.size());
        for (int k : ids) {
            const double* row = emb + static_cast<size_t>(k) * dim;
            double* grow = gemb + static_cast<size_t>(k) * dim;
            for (size_t d = 0; d < dim; ++d) {
                gw[d] += u * inv_n * row[d];   // d score / d w      = h
                grow[d] += u * inv_n * w[d];   // d score / d E[k,d] = w_d / n per occurrence
            }
        }
    }
}

void ReferenceTinyScorer::save_snapshot(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write snapshot: " + path.string());
    out << "tiny-scorer-snapshot v1\n";
    out << "vocab_dim\t" << options_.vocab_dim << '\n';
    out << "embed_dim\t" << options_.embed_dim << '\n';
    out << "hash_seed\t" << options_.hash_seed << '\n';
    out << "score_gain\t" << format_g17(options_.score_gain) << '\n';
    out << "init_scale\t" << format_g17(options_.init_scale) << '\n';
    out << "seed\t" << seed_ << '\n';
    out << "params\t" << params_.size() << '\n';
    for (double v : params_) out << format_g17(v) << '\n';
    if (!out) throw SemanticError("write failed: " + path.string());
}

ReferenceTinyScorer ReferenceTinyScorer::load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open snapshot: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "tiny-scorer-snapshot v1")
        throw ParseError(path.string() + ": not a tiny-scorer snapshot");

    TinyScorerOptions opt;
    uint64_t seed = 0;
    size_t param_count = 0;
    auto expect = [&](const char* key) -> std::string {
        if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated snapshot");
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0] != key)
            throw ParseError(path.string() + ": expected '" + key + "' line, got '" + line + "'");
        return std::string(fields[1]);
    };
    try {
        opt.vocab_dim = std::stoi(expect("vocab_dim"));
        opt.embed_dim = std::stoi(expect("embed_dim"));
        opt.hash_seed = std::stoull(expect("hash_seed"));
        opt.score_gain = std::stod(expect("score_gain"));
        opt.init_scale = std::stod(expect("init_scale"));
        seed = std::stoull(expect("seed"));
        param_count = std::stoull(expect("params"));
    } catch (const std::logic_error&) {
        throw ParseError(path.string() + ": malformed snapshot header");
    }

    ReferenceTinyScorer scorer(seed, opt);
    if (scorer.params_.size() != param_count)
        throw ParseError(path.string() + ": parameter count " + std::to_string(param_count) +
                         " does not match dims");
    for (size_t i = 0; i < param_count; ++i) {
        if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated parameter block");
        scorer.params_[i] = parse_score(trim(line), "param " + std::to_string(i), path);
    }
    return scorer;
}

}  // namespace csqa
