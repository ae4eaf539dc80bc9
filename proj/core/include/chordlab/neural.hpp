#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chordlab/graph.hpp"
#include "chordlab/model.hpp"
#include "chordlab/tensor.hpp"
#include "chordlab/vocab.hpp"

namespace chordlab {

struct BuildOptions {
    bool training = false;
    Rng* dropout_rng = nullptr;  // consumed when training and dropout > 0
    bool positional = true;      // learned positional encodings (tests disable)
};

template <typename T>
struct BuildResult {
    int logits = -1;       // [B,V] final-position logits
    int step_logits = -1;  // [B,L,V] per-position logits (gpt family only)
    int attention = -1;    // [B,L] (lstm-attn) or [B,F*L] (multi-lstm-attn)
};

// One class covers all eight architectures; the kind selects the op sequence
// inside build(). Multi-feature builds with |F|=1 therefore run literally the
// same code as their single-feature counterparts.
class NeuralModel final : public PredictorModel {
public:
    NeuralModel(ModelKind kind, Hyperparams hp, std::vector<std::string> features,
                std::vector<Vocabulary> vocabs, int target_feature, std::uint64_t seed);

    // checkpoint restore; params must match the construction layout
    NeuralModel(ModelKind kind, Hyperparams hp, std::vector<std::string> features,
                std::vector<Vocabulary> vocabs, int target_feature,
                std::vector<NamedTensor> params);

    ModelKind kind() const override { return kind_; }
    const std::vector<std::string>& feature_names() const override { return features_; }
    const Vocabulary& vocab(int feature) const override {
        return vocabs_[static_cast<std::size_t>(feature)];
    }
    int target_feature() const override { return target_feature_; }
    HostTensor<float> predict(const TokenBatch& contexts) const override;
    void save(const std::string& path) const override;

    const Hyperparams& hyperparams() const { return hp_; }
    std::vector<NamedTensor>& params() { return params_; }
    const std::vector<NamedTensor>& params() const { return params_; }
    std::int64_t param_count() const;

    // predict() with explicit build options (e.g. positional encodings off).
    HostTensor<float> predict_with(const TokenBatch& contexts, const BuildOptions& opts) const;

    // Per-position probabilities [B,L,V]; gpt family only.
    HostTensor<float> predict_steps(const TokenBatch& contexts) const;

    // Attention weights at evaluation ([B,L] or [B,F*L]); attention kinds only.
    HostTensor<float> attention_weights(const TokenBatch& contexts) const;

    // Appends param leaves to g (in params() order) and returns their ids.
    template <typename T>
    std::vector<int> param_leaves(Graph<T>& g, const std::vector<HostTensor<T>>& tensors,
                                  bool requires_grad) const;

    template <typename T>
    std::vector<HostTensor<T>> params_as() const;

    template <typename T>
    BuildResult<T> build(Graph<T>& g, std::span<const int> leaves, const TokenBatch& batch,
                         const BuildOptions& opts) const;

    // Training objective: teacher-forced per-position loss for gpt (PAD
    // targets skipped), final-target cross-entropy for everything else.
    template <typename T>
    int build_loss(Graph<T>& g, std::span<const int> leaves, const TokenBatch& batch,
                   std::span<const std::int32_t> targets, const BuildOptions& opts) const;

private:
    void init_params(std::uint64_t seed);
    void validate() const;
    int param_id(const std::string& name) const;

    ModelKind kind_;
    Hyperparams hp_;
    std::vector<std::string> features_;
    std::vector<Vocabulary> vocabs_;
    int target_feature_;
    std::vector<NamedTensor> params_;
    std::unordered_map<std::string, int> param_index_;

    template <typename T>
    friend struct Builder;
};

}  // namespace chordlab
