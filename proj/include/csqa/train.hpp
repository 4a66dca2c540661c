#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csqa/data.hpp"
#include "csqa/prompt.hpp"
#include "csqa/scorer.hpp"

namespace csqa {

// "Linear decay of 0.67 for each 5000 steps" admits two readings; both
// agree at every interval boundary k*interval = initial * factor^k.
enum class ScheduleMode {
    Stepwise,        // multiply by the factor once per full interval
    LinearAnchored,  // interpolate linearly between interval boundaries
};

// What a "step" batches. With question batching, one step consumes
// batch_size questions (5x that in prompts). With prompt batching,
// batch_size counts prompts, rounded down to whole questions since the
// softmax needs all five candidate scores of a question together.
enum class BatchUnit { Questions, Prompts };

enum class EvalCadence { PerEpoch };

ScheduleMode schedule_mode_from_string(std::string_view s);
BatchUnit batch_unit_from_string(std::string_view s);
std::string to_string(ScheduleMode mode);
std::string to_string(BatchUnit unit);

struct TrainConfig {
    int batch_size = 8;
    double initial_lr = 1e-5;
    double decay_factor = 0.67;
    int decay_interval = 5000;
    int epochs = 4;
    uint64_t seed = 1;
    ScheduleMode schedule_mode = ScheduleMode::Stepwise;
    BatchUnit batch_unit = BatchUnit::Questions;
    EvalCadence eval_cadence = EvalCadence::PerEpoch;
    PromptOptions prompt;
};

// Throws ParseError when a field is out of range.
void validate_config(const TrainConfig& config);

// Flat key=value file; '#' starts a comment. Unknown keys are errors.
TrainConfig load_train_config(const std::filesystem::path& path);
void save_train_config(const TrainConfig& config, const std::filesystem::path& path);

// -log softmax(scores)[gold_index], computed with the usual max-shift.
// Always >= 0; equals ln 5 for five equal scores.
double candidate_cross_entropy(std::span<const double> scores, int gold_index);

// d(loss)/d(scores) = softmax(scores) - onehot(gold_index).
std::array<double, kNumChoices> candidate_score_gradient(std::span<const double> scores, int gold_index);

// Scheduled learning rate. Nonincreasing in step; exact at interval
// boundaries in both modes.
double lr_at_step(const TrainConfig& config, long long step);

// Mean candidate cross-entropy over a batch of keyed questions.
double batch_loss(const ScorerBackbone& backbone, std::span<const QuestionRecord> questions,
                  const PromptOptions& options);

// Same, also accumulating d(mean loss)/d(parameters) into grad
// (grad is zeroed first; must have parameters().size() entries).
double batch_loss_with_gradient(const ScorerBackbone& backbone, std::span<const QuestionRecord> questions,
                                const PromptOptions& options, std::span<double> grad);

struct StepRecord {
    long long step = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct CheckpointMeta {
    int epoch = 0;  // 1-based
    long long global_step = 0;
    double dev_accuracy = 0.0;
    uint64_t seed = 0;
};

struct Checkpoint {
    CheckpointMeta meta;
    std::vector<double> parameters;
};

struct TrainResult {
    Checkpoint best;                  // highest dev accuracy, earliest epoch on ties
    std::vector<Checkpoint> epochs;   // one snapshot per epoch, in order
    std::vector<StepRecord> history;  // one record per optimization step
};

// SGD fine-tuning: per epoch, shuffle the train questions under
// config.seed, take batches, apply one gradient step at the scheduled
// rate, then evaluate dev accuracy and snapshot. The backbone is left at
// its final (not best) state.
TrainResult train(ScorerBackbone& backbone, const DatasetSplit& train_split, const DatasetSplit& dev_split,
                  const TrainConfig& config);

// step<TAB>lr<TAB>loss per line.
void save_history(std::span<const StepRecord> history, const std::filesystem::path& path);
std::vector<StepRecord> load_history(const std::filesystem::path& path);

void save_checkpoint_meta(const CheckpointMeta& meta, const std::filesystem::path& path);
CheckpointMeta load_checkpoint_meta(const std::filesystem::path& path);

struct SeedRun {
    uint64_t seed = 0;
    TrainResult result;
    ScoreMatrix dev_scores;
    std::optional<ScoreMatrix> test_scores;
};

// Trains one tiny-scorer model per seed and scores dev (and test, when
// given) with each run's best checkpoint. Matrices carry the seed and
// checkpoint in meta. Per-seed failures are reported with the seed.
std::vector<SeedRun> run_seeds(const TrainConfig& config_template, std::span<const uint64_t> seeds,
                               const DatasetSplit& train_split, const DatasetSplit& dev_split,
                               const DatasetSplit* test_split = nullptr,
                               const TinyScorerOptions& scorer_options = {});

}  // namespace csqa
