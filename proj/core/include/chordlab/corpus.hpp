#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chordlab/chord.hpp"
#include "chordlab/vocab.hpp"

namespace chordlab {

enum class CorpusFormat { tokens, harte };

// A corpus of songs over one or more named features. Every feature sequence
// within a song has the same length; tokens are dense ids into the feature's
// vocabulary. Immutable after construction.
struct Corpus {
    std::vector<std::string> features;
    std::vector<Vocabulary> vocabs;  // one per feature
    // songs[song][feature] -> token id sequence
    std::vector<std::vector<std::vector<std::int32_t>>> songs;

    int num_features() const { return static_cast<int>(features.size()); }
    int num_songs() const { return static_cast<int>(songs.size()); }

    // Throws UnknownFeature.
    int feature_index(std::string_view name) const;

    std::int64_t total_events() const;

    // Per-song sequences of the given feature, restricted to `song_ids`
    // (all songs when empty).
    std::vector<std::vector<std::int32_t>> feature_sequences(
        int feature, std::span<const int> song_ids = {}) const;
};

// Parses the canonical corpus text format:
//   #features: chord melody duration
//   // comment lines start with a double slash
//   <one line per feature, tokens separated by spaces>
//   <blank line between songs>
// A missing header defaults to a single "chord" feature. In harte format the
// chord rows must parse as Harte labels and are re-rendered through `policy`.
Corpus parse_corpus_text(std::string_view text, CorpusFormat format,
                         NormalizePolicy policy = NormalizePolicy::no_inversion);

Corpus load_corpus(const std::string& path, CorpusFormat format,
                   NormalizePolicy policy = NormalizePolicy::no_inversion);

// Emits the canonical text form (header + token rows per song).
std::string corpus_to_text(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::string& path);

// Re-encodes a corpus into another model's vocabularies; unseen tokens map
// to <unk>. Feature names must match.
Corpus reencode(const Corpus& corpus, const std::vector<std::string>& features,
                const std::vector<Vocabulary>& vocabs);

struct Fold {
    std::vector<int> train_songs;
    std::vector<int> test_songs;
};

// Song-level k-fold partition: folds disjoint, union = all songs, sizes
// differ by at most one, deterministic under seed. Throws InvalidK.
std::vector<Fold> split_kfold(const Corpus& corpus, int k, std::uint64_t seed);

}  // namespace chordlab
