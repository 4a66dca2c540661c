#pragma once

#include <span>
#include <string>
#include <vector>

#include "csqa/scorer.hpp"

namespace csqa {

// Replaces the first occurrence of `from` in `prompt` with `to`.
// Lets an adapter swap the string-level separator for a model-native
// segment token before encoding.
std::string replace_separator(std::string prompt, std::string_view from, std::string_view to);

// Contract for plugging a full pretrained encoder in as the scorer
// backbone. A concrete adapter supplies:
//
//   - preprocess(): optional prompt rewriting, e.g. separator swap;
//   - encode_pooled(): the encoder forward pass reduced to one pooled
//     vector per prompt (pooling strategy is the adapter's choice, and
//     intentionally unspecified here);
//
// and inherits a single-logit linear head over the pooled vector:
//
//   score(prompt) = w . encode_pooled(preprocess(prompt)) + b
//
// parameters() exposes the head only; the encoder's own weights live in
// whatever runtime serves it and are outside this interface. Training
// through this class therefore fits a linear probe; full fine-tuning is
// the adapter runtime's business.
class PretrainedEncoderAdapter : public ScorerBackbone {
  public:
    explicit PretrainedEncoderAdapter(int pooled_dim);

    std::vector<double> score_batch(std::span<const std::string> prompts) const final;
    std::span<double> parameters() override { return head_; }
    std::span<const double> parameters() const override { return head_; }
    void accumulate_score_gradient(std::span<const std::string> prompts, std::span<const double> upstream,
                                   std::span<double> grad) const override;

    virtual std::string preprocess(const std::string& prompt) const { return prompt; }

    int pooled_dim() const { return pooled_dim_; }

  protected:
    virtual std::vector<double> encode_pooled(const std::string& prompt) const = 0;

  private:
    int pooled_dim_ = 0;
    std::vector<double> head_;  // pooled_dim weights + bias, zero-initialized
};

}  // namespace csqa
