#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chordlab/tensor.hpp"
#include "chordlab/vocab.hpp"

namespace chordlab {

enum class ModelKind {
    markov,
    vom,
    lstm,
    lstm_attn,
    transformer,
    gpt,
    multi_lstm,
    multi_lstm_attn,
    multi_transformer,
    multi_gpt,
};

const char* to_string(ModelKind kind);
std::optional<ModelKind> model_kind_from_string(std::string_view name);
std::vector<std::string> all_model_kind_names();

bool is_statistical(ModelKind kind);
bool is_multi_feature(ModelKind kind);
bool is_gpt_family(ModelKind kind);
bool is_attention(ModelKind kind);

// Shared hyperparameter bundle; statistical kinds read alpha/max_order,
// neural kinds the rest.
struct Hyperparams {
    int embed_dim = 64;
    int hidden_dim = 128;
    int layers = 2;
    int heads = 4;
    int context_len = 16;
    float dropout = 0.1f;
    double alpha = 0.01;  // additive smoothing
    int max_order = 4;    // variable-order context cap
};

// Unified predictor: a context window of token ids in, a probability
// distribution over the target vocabulary out.
class PredictorModel {
public:
    virtual ~PredictorModel() = default;

    virtual ModelKind kind() const = 0;
    virtual const std::vector<std::string>& feature_names() const = 0;
    virtual const Vocabulary& vocab(int feature) const = 0;
    virtual int target_feature() const = 0;

    int num_features() const { return static_cast<int>(feature_names().size()); }
    int target_vocab_size() const { return vocab(target_feature()).size(); }

    // contexts: [B, L, F]; returns [B, V], rows sum to 1 (+-1e-6).
    virtual HostTensor<float> predict(const TokenBatch& contexts) const = 0;

    virtual void save(const std::string& path) const = 0;
};

// Argmax with ties broken toward the lowest id.
std::int32_t argmax_lowest(std::span<const float> row);
std::int32_t argmax_lowest(std::span<const double> row);

}  // namespace chordlab
