#include <benchmark/benchmark.h>

#include "chordlab/graph.hpp"
#include "chordlab/neural.hpp"
#include "chordlab/rng.hpp"

namespace {

using namespace chordlab;

HostTensor<float> random_tensor(Shape shape, Rng& rng) {
    HostTensor<float> t = HostTensor<float>::zeros(std::move(shape));
    for (float& x : t.data) x = rng.next_float() - 0.5f;
    return t;
}

void BM_Matmul(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    const int n = static_cast<int>(state.range(2));
    Rng rng(7);
    const HostTensor<float> a = random_tensor({m, k}, rng);
    const HostTensor<float> b = random_tensor({k, n}, rng);
    for (auto _ : state) {
        Graph<float> g;
        const int out = g.matmul(g.leaf(a, false), g.leaf(b, false));
        benchmark::DoNotOptimize(g.value(out).data());
    }
    state.counters["flops"] = benchmark::Counter(
        2.0 * m * k * n, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_LstmTrainStep(benchmark::State& state) {
    const int batch = static_cast<int>(state.range(0));
    Rng rng(11);
    Vocabulary vocab;
    for (int i = 0; i < 8; ++i) vocab.add("c" + std::to_string(i));
    Hyperparams hp;  // d=64 h=128 layers=2 L=16
    NeuralModel model(ModelKind::lstm, hp, {"chord"}, {vocab}, 0, 3);

    TokenBatch tokens;
    tokens.batch = batch;
    tokens.len = hp.context_len;
    tokens.feats = 1;
    tokens.tokens.resize(static_cast<std::size_t>(batch) * hp.context_len);
    for (auto& t : tokens.tokens) t = static_cast<std::int32_t>(rng.uniform_int(0, 10));
    std::vector<std::int32_t> targets(static_cast<std::size_t>(batch));
    for (auto& t : targets) t = static_cast<std::int32_t>(rng.uniform_int(3, 10));

    for (auto _ : state) {
        Graph<float> g;
        std::vector<int> leaves;
        for (const auto& p : model.params())
            leaves.push_back(g.leaf(p.tensor.shape, std::span<const float>(p.tensor.data), true));
        const int loss = model.build_loss(g, leaves, tokens, targets, BuildOptions{});
        g.backward(loss);
        benchmark::DoNotOptimize(g.grad(leaves[0]).data());
    }
    state.counters["samples_per_second"] =
        benchmark::Counter(batch, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_TransformerForward(benchmark::State& state) {
    const int batch = static_cast<int>(state.range(0));
    Rng rng(13);
    Vocabulary vocab;
    for (int i = 0; i < 8; ++i) vocab.add("c" + std::to_string(i));
    Hyperparams hp;
    const NeuralModel model(ModelKind::transformer, hp, {"chord"}, {vocab}, 0, 3);

    TokenBatch tokens;
    tokens.batch = batch;
    tokens.len = hp.context_len;
    tokens.feats = 1;
    tokens.tokens.resize(static_cast<std::size_t>(batch) * hp.context_len);
    for (auto& t : tokens.tokens) t = static_cast<std::int32_t>(rng.uniform_int(0, 10));

    for (auto _ : state) {
        const HostTensor<float> probs = model.predict(tokens);
        benchmark::DoNotOptimize(probs.data.data());
    }
    state.counters["samples_per_second"] =
        benchmark::Counter(batch, benchmark::Counter::kIsIterationInvariantRate);
}

}  // namespace

BENCHMARK(BM_Matmul)->Args({32, 192, 512})->Args({64, 64, 64})->Args({256, 256, 256});
BENCHMARK(BM_LstmTrainStep)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_TransformerForward)->Arg(32)->Arg(256);
