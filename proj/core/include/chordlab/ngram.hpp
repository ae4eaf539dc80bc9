#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chordlab/model.hpp"
#include "chordlab/vocab.hpp"

namespace chordlab {

// First-order Markov predictor over a single feature. Counts N[i][j] are
// exact transition counts over adjacent pairs within songs; probabilities are
// (N_ij + alpha) / (sum_k N_ik + alpha * V) with k ranging over the full
// vocabulary, so every successor keeps nonzero mass when alpha > 0.
class MarkovModel final : public PredictorModel {
public:
    MarkovModel(Vocabulary vocab, std::string feature_name, double alpha);

    void fit(const std::vector<std::vector<std::int32_t>>& songs);

    // Distribution over V for a context window; PAD entries are stripped and
    // the last remaining token conditions the row. A context with no counts
    // (or empty after stripping) falls back to the uniform distribution.
    std::vector<double> distribution(std::span<const std::int32_t> context) const;

    ModelKind kind() const override { return ModelKind::markov; }
    const std::vector<std::string>& feature_names() const override { return features_; }
    const Vocabulary& vocab(int) const override { return vocab_; }
    int target_feature() const override { return 0; }
    HostTensor<float> predict(const TokenBatch& contexts) const override;
    void save(const std::string& path) const override;

    double alpha() const { return alpha_; }
    const std::vector<std::uint32_t>& counts() const { return counts_; }  // [V*V]
    void set_count(std::int32_t from, std::int32_t to, std::uint32_t n);

private:
    Vocabulary vocab_;
    std::vector<std::string> features_;
    double alpha_;
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint64_t> row_totals_;
};

// Variable-order Markov predictor. A stored key is the context *including*
// the current token, lengths 1..max_order, so the length-1 table is exactly
// the first-order model. Prediction walks the longest stored suffix of the
// query, backing off one token at a time, then to the uniform distribution.
class VomModel final : public PredictorModel {
public:
    struct SuccessorCounts {
        std::map<std::int32_t, std::uint32_t> succ;
        std::uint64_t total = 0;
    };
    using CountTable = std::map<std::vector<std::int32_t>, SuccessorCounts>;

    VomModel(Vocabulary vocab, std::string feature_name, double alpha, int max_order);

    void fit(const std::vector<std::vector<std::int32_t>>& songs);

    std::vector<double> distribution(std::span<const std::int32_t> context) const;

    ModelKind kind() const override { return ModelKind::vom; }
    const std::vector<std::string>& feature_names() const override { return features_; }
    const Vocabulary& vocab(int) const override { return vocab_; }
    int target_feature() const override { return 0; }
    HostTensor<float> predict(const TokenBatch& contexts) const override;
    void save(const std::string& path) const override;

    double alpha() const { return alpha_; }
    int max_order() const { return max_order_; }
    const CountTable& counts() const { return counts_; }
    void add_count(std::vector<std::int32_t> key, std::int32_t successor, std::uint32_t n);

private:
    Vocabulary vocab_;
    std::vector<std::string> features_;
    double alpha_;
    int max_order_;
    CountTable counts_;
};

MarkovModel fit_first_order(const std::vector<std::vector<std::int32_t>>& songs,
                            double alpha, Vocabulary vocab, std::string feature_name);

VomModel fit_variable_order(const std::vector<std::vector<std::int32_t>>& songs,
                            double alpha, int max_order, Vocabulary vocab,
                            std::string feature_name);

// Argmax of distribution(context), ties broken toward the lowest token id.
std::int32_t predict_next(const MarkovModel& model, std::span<const std::int32_t> context);
std::int32_t predict_next(const VomModel& model, std::span<const std::int32_t> context);

}  // namespace chordlab
