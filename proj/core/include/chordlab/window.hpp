#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chordlab/corpus.hpp"
#include "chordlab/tensor.hpp"

namespace chordlab {

// Fixed-length prediction samples: context [L, F] token ids (left-padded with
// <pad>), target id of the target feature at the next position. Windows never
// cross song boundaries.
struct WindowSet {
    int context_len = 0;
    int num_features = 1;
    int target_feature = 0;
    std::vector<std::int32_t> contexts;  // [n, L, F] row-major
    std::vector<std::int32_t> targets;   // [n]
    std::vector<std::int32_t> song_ids;  // [n]

    std::int64_t size() const { return static_cast<std::int64_t>(targets.size()); }

    std::int32_t context_at(std::int64_t sample, int t, int f = 0) const {
        return contexts[(sample * context_len + t) * num_features + f];
    }
};

// One sample per position 1..len-1 of every song.
WindowSet make_windows(const Corpus& corpus, int context_len,
                       const std::string& target_feature);

// Indices of samples whose song id is in `songs`.
std::vector<std::int64_t> select_by_song(const WindowSet& windows, std::span<const int> songs);

// A subset view used for training/evaluation batching.
struct WindowSlice {
    const WindowSet* set = nullptr;
    std::vector<std::int64_t> idx;

    std::int64_t size() const { return static_cast<std::int64_t>(idx.size()); }

    // Gathers samples idx[first..first+count) into a dense batch.
    TokenBatch gather(std::int64_t first, std::int64_t count) const;
    std::vector<std::int32_t> gather_targets(std::int64_t first, std::int64_t count) const;
};

WindowSlice full_slice(const WindowSet& windows);
WindowSlice slice_by_song(const WindowSet& windows, std::span<const int> songs);

// Single-lane view of a multi-feature batch (for single-feature models).
TokenBatch extract_feature(const TokenBatch& batch, int lane);

}  // namespace chordlab
