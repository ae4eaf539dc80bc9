#pragma once

#include <cstdint>
#include <span>

#include "chordlab/model.hpp"
#include "chordlab/window.hpp"
#include "chordlab/word2vec.hpp"

namespace chordlab {

// Probabilities below this floor are clamped before taking logs so that
// unsmoothed statistical models cannot emit infinite perplexity.
inline constexpr double kProbFloor = 1e-10;

struct MetricReport {
    double accuracy = 0;    // in [0,1]
    double perplexity = 0;  // >= 1
    double similarity = 0;  // mean w2v similarity, in [0,1]
    std::int64_t n = 0;
    std::int64_t clamped = 0;  // how many probabilities hit the floor
};

// Deterministic pairwise (tree) summation.
double pairwise_sum(std::span<const double> xs);

// Exact-match fraction. Throws LengthMismatch / EmptyInput.
double accuracy(std::span<const std::int32_t> predictions, std::span<const std::int32_t> targets);

// exp(-mean log p) over the probabilities assigned to the true targets.
double perplexity(std::span<const double> true_probs, std::int64_t* clamped = nullptr);

// One pass over the slice: greedy predictions drive accuracy and similarity,
// true-target probabilities drive perplexity.
MetricReport evaluate(const PredictorModel& model, const WindowSlice& data,
                      const ChordEmbeddings& embeddings, int batch_size = 256);

}  // namespace chordlab
