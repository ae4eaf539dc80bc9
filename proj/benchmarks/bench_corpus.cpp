#include <benchmark/benchmark.h>

#include "chordlab/chord.hpp"
#include "chordlab/corpus.hpp"
#include "chordlab/window.hpp"

namespace {

using namespace chordlab;

void BM_ParseChordLabel(benchmark::State& state) {
    const char* labels[] = {"C:maj", "F#:min7/b3", "Ab:7", "G:sus4", "D:hdim7/5", "E"};
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_chord_label(labels[i % 6]));
        ++i;
    }
}

std::string big_corpus_text(int songs, int len) {
    const char* chords[] = {"C:maj", "G:maj", "A:min", "F:maj", "D:min", "E:min", "G:7", "B:dim"};
    std::string text = "#features: chord\n";
    for (int s = 0; s < songs; ++s) {
        text += "\n";
        for (int t = 0; t < len; ++t) {
            text += chords[(s + t) % 8];
            text += t + 1 == len ? "\n" : " ";
        }
    }
    return text;
}

void BM_ParseCorpus(benchmark::State& state) {
    const std::string text = big_corpus_text(static_cast<int>(state.range(0)), 40);
    for (auto _ : state) {
        const Corpus corpus = parse_corpus_text(text, CorpusFormat::harte);
        benchmark::DoNotOptimize(corpus.num_songs());
    }
}

void BM_MakeWindows(benchmark::State& state) {
    const Corpus corpus =
        parse_corpus_text(big_corpus_text(static_cast<int>(state.range(0)), 40),
                          CorpusFormat::tokens);
    for (auto _ : state) {
        const WindowSet ws = make_windows(corpus, 16, "chord");
        benchmark::DoNotOptimize(ws.size());
    }
}

}  // namespace

BENCHMARK(BM_ParseChordLabel);
BENCHMARK(BM_ParseCorpus)->Arg(100);
BENCHMARK(BM_MakeWindows)->Arg(100);
