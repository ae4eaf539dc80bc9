#include <benchmark/benchmark.h>

#include "chordlab/ngram.hpp"
#include "chordlab/rng.hpp"

namespace {

using namespace chordlab;

std::vector<std::vector<std::int32_t>> synthetic_songs(int songs, int len, int vocab) {
    Rng rng(99);
    std::vector<std::vector<std::int32_t>> out;
    for (int s = 0; s < songs; ++s) {
        std::vector<std::int32_t> seq;
        for (int t = 0; t < len; ++t)
            seq.push_back(static_cast<std::int32_t>(rng.uniform_int(3, vocab - 1)));
        out.push_back(std::move(seq));
    }
    return out;
}

Vocabulary vocab_of(int n) {
    Vocabulary v;
    for (int i = 0; i < n - Vocabulary::kReserved; ++i) v.add("c" + std::to_string(i));
    return v;
}

void BM_FitFirstOrder(benchmark::State& state) {
    const auto songs = synthetic_songs(static_cast<int>(state.range(0)), 40, 24);
    const Vocabulary vocab = vocab_of(24);
    for (auto _ : state) {
        MarkovModel model = fit_first_order(songs, 0.01, vocab, "chord");
        benchmark::DoNotOptimize(model.counts().data());
    }
}

void BM_FitVariableOrder(benchmark::State& state) {
    const auto songs = synthetic_songs(static_cast<int>(state.range(0)), 40, 24);
    const Vocabulary vocab = vocab_of(24);
    for (auto _ : state) {
        VomModel model = fit_variable_order(songs, 0.01, 4, vocab, "chord");
        benchmark::DoNotOptimize(&model.counts());
    }
}

void BM_VomDistribution(benchmark::State& state) {
    const auto songs = synthetic_songs(100, 40, 24);
    const Vocabulary vocab = vocab_of(24);
    const VomModel model = fit_variable_order(songs, 0.01, 4, vocab, "chord");
    Rng rng(5);
    std::vector<std::int32_t> ctx(8);
    for (auto _ : state) {
        for (auto& t : ctx) t = static_cast<std::int32_t>(rng.uniform_int(3, 23));
        benchmark::DoNotOptimize(model.distribution(ctx).data());
    }
}

}  // namespace

BENCHMARK(BM_FitFirstOrder)->Arg(50)->Arg(200);
BENCHMARK(BM_FitVariableOrder)->Arg(50)->Arg(200);
BENCHMARK(BM_VomDistribution);
