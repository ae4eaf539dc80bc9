#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chordlab/tensor.hpp"

namespace chordlab {

struct Word2VecConfig {
    int dim = 32;
    int window = 2;
    int negatives = 5;
    int epochs = 20;
    double lr = 0.025;
};

// Skip-gram chord embeddings; similarity is cosine clipped at zero.
struct ChordEmbeddings {
    int dim = 0;
    HostTensor<float> vectors;  // [V, dim] input vectors

    std::int32_t vocab_size() const { return vectors.shape.empty() ? 0 : vectors.shape[0]; }

    // max(cos(a,b), 0); ids outside the table score against <unk>.
    double similarity(std::int32_t a, std::int32_t b) const;
};

// Skip-gram with negative sampling (unigram^0.75 noise). Deterministic under
// seed on one thread. Throws EmptyCorpus.
ChordEmbeddings train_embeddings(const std::vector<std::vector<std::int32_t>>& sequences,
                                 std::int32_t vocab_size, const Word2VecConfig& cfg,
                                 std::uint64_t seed);

void save_embeddings(const ChordEmbeddings& emb, const std::string& path);
ChordEmbeddings load_embeddings(const std::string& path);

}  // namespace chordlab
