#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "csqa/data.hpp"
#include "csqa/prompt.hpp"

namespace csqa {

// Per-model candidate scores: one row of five unnormalized reals per
// question, aligned with question_ids.
struct ScoreMatrix {
    std::string model_id;
    std::vector<std::string> question_ids;
    std::vector<std::array<double, kNumChoices>> scores;
    std::map<std::string, std::string> meta;
};

// Throws on structural violations: row/id count mismatch, duplicate ids,
// non-finite scores.
void validate_matrix(const ScoreMatrix& matrix);

// Text format, lossless for doubles:
//   model_id<TAB>key=value<TAB>...
//   question_id<TAB>s0<TAB>s1<TAB>s2<TAB>s3<TAB>s4
void save_matrix(const ScoreMatrix& matrix, const std::filesystem::path& path);
ScoreMatrix load_matrix(const std::filesystem::path& path);

// A text scorer: one finite real per prompt, higher = more plausible.
// Implementations must be deterministic given (parameters, input) and
// must not mutate parameters while scoring.
class ScorerBackbone {
  public:
    virtual ~ScorerBackbone() = default;

    virtual std::string id() const = 0;

    // One score per prompt, same order. |outputs| == |inputs|.
    virtual std::vector<double> score_batch(std::span<const std::string> prompts) const = 0;

    // Trainable parameters as one flat ordered array. Backbones without
    // trainable state expose an empty span.
    virtual std::span<double> parameters() { return {}; }
    virtual std::span<const double> parameters() const { return {}; }

    // Adds d(sum_i upstream[i] * score_i)/d(theta) into grad, which must
    // have parameters().size() entries. No-op for untrainable backbones.
    virtual void accumulate_score_gradient(std::span<const std::string> prompts,
                                           std::span<const double> upstream,
                                           std::span<double> grad) const {
        (void)prompts;
        (void)upstream;
        (void)grad;
    }
};

// Scores the five candidates of one question, in label order A-E.
// Failures are rethrown with the question id attached.
std::array<double, kNumChoices> score_question(const ScorerBackbone& backbone, const QuestionRecord& record,
                                               const PromptOptions& options = {});

// One row per record, split order preserved. model_id defaults to the
// backbone id; meta records the backbone identity.
ScoreMatrix score_split(const ScorerBackbone& backbone, const DatasetSplit& split,
                        const PromptOptions& options = {}, const std::string& model_id = "");

struct TinyScorerOptions {
    int vocab_dim = 4096;
    int embed_dim = 32;
    uint64_t hash_seed = 0x9e3779b97f4a7c15ull;
    // Fixed output gain. Calibrated so that stochastic gradient steps at
    // learning rates tuned for large pretrained encoders (~1e-5) move this
    // tiny model by useful amounts; without it the model barely trains at
    // such rates.
    double score_gain = 4000.0;
    // Embedding init range. Kept small so initial score spread stays well
    // under one gradient step's worth of movement.
    double init_scale = 2e-4;
};

// Desk-scale stand-in for a pretrained encoder. Whitespace tokens are
// hashed into vocab_dim buckets, bucket embeddings are mean-pooled, and a
// linear head maps the pooled vector to one score:
//
//   score(text) = gain * (w . mean_k E[bucket_k] + b)
//
// Deterministic in (parameters, text, hash_seed) and differentiable with
// respect to every parameter. Parameter layout: embedding table
// (vocab_dim x embed_dim, row-major), then head weights (embed_dim),
// then bias.
class ReferenceTinyScorer final : public ScorerBackbone {
  public:
    explicit ReferenceTinyScorer(uint64_t seed, const TinyScorerOptions& options = {});

    std::string id() const override;
    std::vector<double> score_batch(std::span<const std::string> prompts) const override;
    std::span<double> parameters() override { return params_; }
    std::span<const double> parameters() const override { return params_; }
    void accumulate_score_gradient(std::span<const std::string> prompts, std::span<const double> upstream,
                                   std::span<double> grad) const override;

    const TinyScorerOptions& options() const { return options_; }
    uint64_t seed() const { return seed_; }

    void save_snapshot(const std::filesystem::path& path) const;
    static ReferenceTinyScorer load_snapshot(const std::filesystem::path& path);

    // Bucket indices for one prompt, occurrences kept.
    std::vector<int> buckets(std::string_view text) const;

  private:
    double score_one(std::string_view text) const;

    TinyScorerOptions options_;
    uint64_t seed_ = 0;
    std::vector<double> params_;
};

}  // namespace csqa
