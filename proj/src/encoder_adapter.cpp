#include "csqa/encoder_adapter.hpp"

#include <stdexcept>

namespace csqa {

std::string replace_separator(std::string prompt, std::string_view from, std::string_view to) {
    if (from.empty()) return prompt;
    size_t pos = prompt.find(from);
    if (pos != std::string::npos) prompt.replace(pos, from.size(), to);
    return prompt;
}

PretrainedEncoderAdapter::PretrainedEncoderAdapter(int pooled_dim) : pooled_dim_(pooled_dim) {
    if (pooled_dim < 1) throw std::invalid_argument("encoder adapter: pooled_dim must be >= 1");
    head_.assign(static_cast<size_t>(pooled_dim) + 1, 0.0);
}

std::vector<double> PretrainedEncoderAdapter::score_batch(std::span<const std::string> prompts) const {
    const size_t dim = static_cast<size_t>(pooled_dim_);
    std::vector<double> out;
    out.reserve(prompts.size());
    for (const std::string& p : prompts) {
        std::vector<double> pooled = encode_pooled(preprocess(p));
        if (pooled.size() != dim)
            throw std::runtime_error("encoder adapter: pooled vector has size " + std::to_string(pooled.size()) +
                                     ", expected " + std::to_string(dim));
        double s = head_[dim];  // bias
        for (size_t d = 0; d < dim; ++d) s += head_[d] * pooled[d];
        out.push_back(s);
    }
    return out;
}

void PretrainedEncoderAdapter::accumulate_score_gradient(std::span<const std::string> prompts,
                                                         std::span<const double> upstream,
                                                         std::span<double> grad) const {
    if (prompts.size() != upstream.size())
        throw std::invalid_argument("encoder adapter: upstream size must match prompt count");
    if (grad.size() != head_.size())
        throw std::invalid_argument("encoder adapter: gradient buffer has wrong size");
    const size_t dim = static_cast<size_t>(pooled_dim_);
    for (size_t i = 0; i < prompts.size(); ++i) {
        std::vector<double> pooled = encode_pooled(preprocess(prompts[i]));
        if (pooled.size() != dim)
            throw std::runtime_error("encoder adapter: pooled vector has size " + std::to_string(pooled.size()) +
                                     ", expected " + std::to_string(dim));
        for (size_t d = 0; d < dim; ++d) grad[d] += upstream[i] * pooled[d];
        grad[dim] += upstream[i];
    }
}

}  // namespace csqa
