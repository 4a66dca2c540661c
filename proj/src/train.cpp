#include "csqa/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "csqa/ensemble.hpp"
#include "csqa/errors.hpp"
#include "csqa/rng.hpp"
#include "csqa/text.hpp"

namespace csqa {

ScheduleMode schedule_mode_from_string(std::string_view s) {
    if (s == "stepwise") return ScheduleMode::Stepwise;
    if (s == "linear" || s == "linear-anchored") return ScheduleMode::LinearAnchored;
    throw ParseError("unknown schedule mode '" + std::string(s) + "' (expected stepwise or linear)");
}

BatchUnit batch_unit_from_string(std::string_view s) {
    if (s == "questions") return BatchUnit::Questions;
    if (s == "prompts") return BatchUnit::Prompts;
    throw ParseError("unknown batch unit '" + std::string(s) + "' (expected questions or prompts)");
}

std::string to_string(ScheduleMode mode) {
    return mode == ScheduleMode::Stepwise ? "stepwise" : "linear-anchored";
}

std::string to_string(BatchUnit unit) { return unit == BatchUnit::Questions ? "questions" : "prompts"; }

void validate_config(const TrainConfig& config) {
    if (config.batch_size < 1) throw ParseError("config: batch_size must be >= 1");
    if (!(config.initial_lr > 0)) throw ParseError("config: initial_lr must be > 0");
    if (!(config.decay_factor > 0 && config.decay_factor <= 1))
        throw ParseError("config: decay_factor must be in (0, 1]");
    if (config.decay_interval < 1) throw ParseError("config: decay_interval must be >= 1");
    if (config.epochs < 1) throw ParseError("config: epochs must be >= 1");
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path.string());

    TrainConfig config;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key(trim(sv.substr(0, eq)));
        std::string value(trim(sv.substr(eq + 1)));
        try {
            if (key == "batch_size") config.batch_size = std::stoi(value);
            else if (key == "initial_lr") config.initial_lr = std::stod(value);
            else if (key == "decay_factor") config.decay_factor = std::stod(value);
            else if (key == "decay_interval") config.decay_interval = std::stoi(value);
            else if (key == "epochs") config.epochs = std::stoi(value);
            else if (key == "seed") config.seed = std::stoull(value);
            else if (key == "schedule_mode") config.schedule_mode = schedule_mode_from_string(value);
            else if (key == "batch_unit") config.batch_unit = batch_unit_from_string(value);
            else if (key == "eval_cadence") {
                if (value != "per-epoch")
                    throw ParseError(path.string() + ": eval_cadence must be per-epoch");
            } else if (key == "separator") config.prompt.separator = value;
            else if (key == "capitalize_answer") config.prompt.capitalize_answer = (value == "true" || value == "1");
            else if (key == "append_period") config.prompt.append_period = (value == "true" || value == "1");
            else
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown config key '" + key +
                                 "'");
        } catch (const std::logic_error&) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
        }
    }
    validate_config(config);
    return config;
}

void save_train_config(const TrainConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write config file: " + path.string());
    out << "batch_size = " << config.batch_size << '\n';
    out << "initial_lr = " << format_g17(config.initial_lr) << '\n';
    out << "decay_factor = " << format_g17(config.decay_factor) << '\n';
    out << "decay_interval = " << config.decay_interval << '\n';
    out << "epochs = " << config.epochs << '\n';
    out << "seed = " << config.seed << '\n';
    out << "schedule_mode = " << to_string(config.schedule_mode) << '\n';
    out << "batch_unit = " << to_string(config.batch_unit) << '\n';
    out << "eval_cadence = per-epoch\n";
    out << "separator = " << config.prompt.separator << '\n';
    out << "capitalize_answer = " << (config.prompt.capitalize_answer ? "true" : "false") << '\n';
    out << "append_period = " << (config.prompt.append_period ? "true" : "false") << '\n';
    if (!out) throw SemanticError("write failed: " + path.string());
}

double candidate_cross_entropy(std::span<const double> scores, int gold_index) {
    if (scores.size() != static_cast<size_t>(kNumChoices))
        throw std::invalid_argument("candidate_cross_entropy: expected 5 scores");
    if (gold_index < 0 || gold_index >= kNumChoices)
        throw std::invalid_argument("candidate_cross_entropy: gold index out of range");
    double max = scores[0];
    for (double s : scores) {
        if (!std::isfinite(s)) throw std::invalid_argument("candidate_cross_entropy: non-finite score");
        max = std::max(max, s);
    }
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - max);
    // loss = logsumexp(scores) - scores[gold]; the max-shift keeps sum >= 1,
    // so the result cannot round below zero.
    return (max - scores[static_cast<size_t>(gold_index)]) + std::log(sum);
}

std::array<double, kNumChoices> candidate_score_gradient(std::span<const double> scores, int gold_index) {
    if (scores.size() != static_cast<size_t>(kNumChoices))
        throw std::invalid_argument("candidate_score_gradient: expected 5 scores");
    if (gold_index < 0 || gold_index >= kNumChoices)
        throw std::invalid_argument("candidate_score_gradient: gold index out of range");
    double max = scores[0];
    for (double s : scores) {
        if (!std::isfinite(s)) throw std::invalid_argument("candidate_score_gradient: non-finite score");
        max = std::max(max, s);
    }
    std::array<double, kNumChoices> p{};
    double sum = 0.0;
    for (int i = 0; i < kNumChoices; ++i) {
        p[static_cast<size_t>(i)] = std::exp(scores[static_cast<size_t>(i)] - max);
        sum += p[static_cast<size_t>(i)];
    }
    for (double& v : p) v /= sum;
    p[static_cast<size_t>(gold_index)] -= 1.0;
    return p;
}

double lr_at_step(const TrainConfig& config, long long step) {
    if (step < 0) throw std::invalid_argument("lr_at_step: step must be >= 0");
    const long long k = step / config.decay_interval;
    const double anchor = config.initial_lr * std::pow(config.decay_factor, static_cast<double>(k));
    if (config.schedule_mode == ScheduleMode::Stepwise) return anchor;
    const long long into = step - k * config.decay_interval;
    if (into == 0) return anchor;
    const double next = config.initial_lr * std::pow(config.decay_factor, static_cast<double>(k + 1));
    const double t = static_cast<double>(into) / static_cast<double>(config.decay_interval);
    return anchor + t * (next - anchor);
}

namespace {

int gold_index_of(const QuestionRecord& record) {
    if (!record.answer_key)
        throw SemanticError("question '" + record.id + "': no answer key; cannot compute training loss");
    return *record.answer_key - 'A';
}

std::vector<std::string> prompts_of(const QuestionRecord& record, const PromptOptions& options) {
    std::vector<std::string> texts;
    texts.reserve(kNumChoices);
    for (auto& p : expand_question(record, options)) texts.push_back(std::move(p.text));
    return texts;
}

}  // namespace

double batch_loss(const ScorerBackbone& backbone, std::span<const QuestionRecord> questions,
                  const PromptOptions& options) {
    if (questions.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double total = 0.0;
    for (const QuestionRecord& q : questions) {
        auto scores = score_question(backbone, q, options);
        total += candidate_cross_entropy(scores, gold_index_of(q));
    }
    return total / static_cast<double>(questions.size());
}

double batch_loss_with_gradient(const ScorerBackbone& backbone, std::span<const QuestionRecord> questions,
                                const PromptOptions& options, std::span<double> grad) {
    if (questions.empty()) throw std::invalid_argument("batch_loss_with_gradient: empty batch");
    std::fill(grad.begin(), grad.end(), 0.0);

    std::vector<std::string> prompts;
    prompts.reserve(questions.size() * kNumChoices);
    std::vector<int> golds;
    golds.reserve(questions.size());
    for (const QuestionRecord& q : questions) {
        golds.push_back(gold_index_of(q));
        for (auto& text : prompts_of(q, options)) prompts.push_back(std::move(text));
    }

    const std::vector<double> scores = backbone.score_batch(prompts);
    if (scores.size() != prompts.size())
        throw SemanticError("backbone returned " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(prompts.size()) + " prompts");

    const double inv_b = 1.0 / static_cast<double>(questions.size());
    double total = 0.0;
    std::vector<double> upstream(prompts.size(), 0.0);
    for (size_t qi = 0; qi < questions.size(); ++qi) {
        std::span<const double> row(scores.data() + qi * kNumChoices, kNumChoices);
        total += candidate_cross_entropy(row, golds[qi]);
        auto g = candidate_score_gradient(row, golds[qi]);
        for (int c = 0; c < kNumChoices; ++c)
            upstream[qi * kNumChoices + static_cast<size_t>(c)] = g[static_cast<size_t>(c)] * inv_b;
    }
    backbone.accumulate_score_gradient(prompts, upstream, grad);
    return total * inv_b;
}

namespace {

double dev_accuracy_now(const ScorerBackbone& backbone, const DatasetSplit& dev_split,
                        const PromptOptions& options) {
    ScoreMatrix m = score_split(backbone, dev_split, options);
    return accuracy(predict(m), dev_split).accuracy;
}

}  // namespace

TrainResult train(ScorerBackbone& backbone, const DatasetSplit& train_split, const DatasetSplit& dev_split,
                  const TrainConfig& config) {
    validate_config(config);
    if (train_split.records.empty()) throw SemanticError("train split is empty");
    if (dev_split.records.empty()) throw SemanticError("dev split is empty");
    for (const QuestionRecord& q : train_split.records) gold_index_of(q);
    for (const QuestionRecord& q : dev_split.records) gold_index_of(q);

    const size_t n = train_split.records.size();
    // One step always consumes whole questions; in prompt mode the batch
    // size counts prompts and is rounded down to full questions.
    const size_t questions_per_step =
        config.batch_unit == BatchUnit::Questions
            ? static_cast<size_t>(config.batch_size)
            : std::max<size_t>(1, static_cast<size_t>(config.batch_size) / kNumChoices);

    TrainResult result;
    std::vector<double> grad(backbone.parameters().size(), 0.0);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(config.seed);

    long long global_step = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (size_t start = 0; start < n; start += questions_per_step) {
            const size_t count = std::min(questions_per_step, n - start);
            std::vector<QuestionRecord> batch;
            batch.reserve(count);
            for (size_t i = 0; i < count; ++i) batch.push_back(train_split.records[order[start + i]]);

            const double lr = lr_at_step(config, global_step);
            const double loss = batch_loss_with_gradient(backbone, batch, config.prompt, grad);
            auto params = backbone.parameters();
            for (size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];

            result.history.push_back({global_step, lr, loss});
            ++global_step;
        }

        Checkpoint ck;
        ck.meta.epoch = epoch;
        ck.meta.global_step = global_step;
        ck.meta.dev_accuracy = dev_accuracy_now(backbone, dev_split, config.prompt);
        ck.meta.seed = config.seed;
        auto params = backbone.parameters();
        ck.parameters.assign(params.begin(), params.end());
        result.epochs.push_back(std::move(ck));
    }

    // Best on dev; ties go to the earliest epoch.
    size_t best = 0;
    for (size_t i = 1; i < result.epochs.size(); ++i)
        if (result.epochs[i].meta.dev_accuracy > result.epochs[best].meta.dev_accuracy) best = i;
    result.best = result.epochs[best];
    return result;
}

void save_history(std::span<const StepRecord> history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write history: " + path.string());
    for (const StepRecord& r : history)
        out << r.step << '\t' << format_g17(r.lr) << '\t' << format_g17(r.loss) << '\n';
    if (!out) throw SemanticError("write failed: " + path.string());
}

std::vector<StepRecord> load_history(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open history: " + path.string());
    std::vector<StepRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected step, lr, loss");
        try {
            out.push_back({std::stoll(std::string(fields[0])), std::stod(std::string(fields[1])),
                           std::stod(std::string(fields[2]))});
        } catch (const std::logic_error&) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad numeric field");
        }
    }
    return out;
}

void save_checkpoint_meta(const CheckpointMeta& meta, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SemanticError("cannot write checkpoint meta: " + path.string());
    out << "epoch = " << meta.epoch << '\n';
    out << "global_step = " << meta.global_step << '\n';
    out << "dev_accuracy = " << format_g17(meta.dev_accuracy) << '\n';
    out << "seed = " << meta.seed << '\n';
    if (!out) throw SemanticError("write failed: " + path.string());
}

CheckpointMeta load_checkpoint_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open checkpoint meta: " + path.string());
    CheckpointMeta meta;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        size_t eq = sv.find('=');
        if (eq == std::string_view::npos) throw ParseError(path.string() + ": expected key = value");
        std::string key(trim(sv.substr(0, eq)));
        std::string value(trim(sv.substr(eq + 1)));
        try {
            if (key == "epoch") meta.epoch = std::stoi(value);
            else if (key == "global_step") meta.global_step = std::stoll(value);
            else if (key == "dev_accuracy") meta.dev_accuracy = std::stod(value);
            else if (key == "seed") meta.seed = std::stoull(value);
            else throw ParseError(path.string() + ": unknown key '" + key + "'");
        } catch (const std::logic_error&) {
            throw ParseError(path.string() + ": bad value for '" + key + "'");
        }
    }
    return meta;
}

std::vector<SeedRun> run_seeds(const TrainConfig& config_template, std::span<const uint64_t> seeds,
                               const DatasetSplit& train_split, const DatasetSplit& dev_split,
                               const DatasetSplit* test_split, const TinyScorerOptions& scorer_options) {
    if (seeds.empty()) throw std::invalid_argument("run_seeds: need at least one seed");

    std::vector<SeedRun> runs;
    runs.reserve(seeds.size());
    for (uint64_t seed : seeds) {
        try {
            TrainConfig config = config_template;
            config.seed = seed;

            ReferenceTinyScorer scorer(seed, scorer_options);
            SeedRun run;
            run.seed = seed;
            run.result = train(scorer, train_split, dev_split, config);

            // Score with the best-on-dev snapshot, not the final state.
            auto params = scorer.parameters();
            std::copy(run.result.best.parameters.begin(), run.result.best.parameters.end(), params.begin());

            const std::string model_id = scorer.id() + "/seed" + std::to_string(seed);
            auto annotate = [&](ScoreMatrix& m) {
                m.model_id = model_id;
                m.meta["backbone"] = scorer.id();
                m.meta["seed"] = std::to_string(seed);
                m.meta["checkpoint"] = "epoch" + std::to_string(run.result.best.meta.epoch);
                m.meta["dev_accuracy"] = format_g17(run.result.best.meta.dev_accuracy);
            };
            run.dev_scores = score_split(scorer, dev_split, config.prompt, model_id);
            annotate(run.dev_scores);
            if (test_split) {
                run.test_scores = score_split(scorer, *test_split, config.prompt, model_id);
                annotate(*run.test_scores);
            }
            runs.push_back(std::move(run));
        } catch (const ParseError& e) {
            throw ParseError("seed " + std::to_string(seed) + ": " + e.what());
        } catch (const std::exception& e) {
            throw SemanticError("seed " + std::to_string(seed) + ": " + e.what());
        }
    }
    return runs;
}

}  // namespace csqa
