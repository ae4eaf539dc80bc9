#include <doctest.h>

#include <cmath>

#include "chordlab/checkpoint.hpp"
#include "chordlab/errors.hpp"
#include "chordlab/ngram.hpp"
#include "grammars.hpp"
#include "oracle_ngram.hpp"
#include "tmpdir.hpp"

using namespace chordlab;
using namespace chordlab::testing;

TEST_SUITE_BEGIN("ngram");

namespace {

// vocab {a..} on top of the reserved three
Vocabulary vocab_of(int n) {
    Vocabulary v;
    for (int i = 0; i < n; ++i) v.add("t" + std::to_string(i));
    return v;
}

}  // namespace

TEST_CASE("first order counts adjacent pairs exactly") {
    // songs [[C,G,C,F]]: P(G|C)=P(F|C)=0.5 at alpha=0
    Vocabulary v;
    const std::int32_t C = v.add("C"), G = v.add("G"), F = v.add("F");
    MarkovModel m = fit_first_order({{C, G, C, F}}, 0.0, v, "chord");
    const auto row = m.distribution(std::vector<std::int32_t>{C});
    CHECK(row[static_cast<std::size_t>(G)] == doctest::Approx(0.5));
    CHECK(row[static_cast<std::size_t>(F)] == doctest::Approx(0.5));
    CHECK(row[static_cast<std::size_t>(C)] == 0.0);
}

TEST_CASE("smoothing denominator runs over the full vocabulary") {
    // songs [[A,A]], vocab {A,B}+reserved (V=5), alpha=1:
    // P(A|A) = (1+1) / (1 + 5*1) = 2/6
    Vocabulary v;
    const std::int32_t A = v.add("A");
    v.add("B");
    MarkovModel m = fit_first_order({{A, A}}, 1.0, v, "chord");
    const auto row = m.distribution(std::vector<std::int32_t>{A});
    CHECK(row[static_cast<std::size_t>(A)] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("single observed successor gets probability one") {
    Vocabulary v;
    const std::int32_t A = v.add("A"), B = v.add("B");
    MarkovModel m = fit_first_order({{A, B}, {A, B}}, 0.0, v, "chord");
    CHECK(m.distribution(std::vector<std::int32_t>{A})[static_cast<std::size_t>(B)] == 1.0);
}

TEST_CASE("vom prefers the longest stored context") {
    // {[A,B,C] x8, [D,B,E] x8}: after context [A,B] the only successor is C,
    // after [B] alone C and E split evenly.
    Vocabulary v;
    const std::int32_t A = v.add("A"), B = v.add("B"), C = v.add("C"), D = v.add("D"),
                       E = v.add("E");
    std::vector<std::vector<std::int32_t>> songs;
    for (int i = 0; i < 8; ++i) {
        songs.push_back({A, B, C});
        songs.push_back({D, B, E});
    }
    VomModel m = fit_variable_order(songs, 0.0, 3, v, "chord");
    CHECK(predict_next(m, std::vector<std::int32_t>{A, B}) == C);
    const auto row = m.distribution(std::vector<std::int32_t>{B});
    CHECK(row[static_cast<std::size_t>(C)] == doctest::Approx(0.5));
    CHECK(row[static_cast<std::size_t>(E)] == doctest::Approx(0.5));
}

TEST_CASE("fully unseen context is uniform when smoothed") {
    Vocabulary v = vocab_of(3);  // V = 6
    VomModel m = fit_variable_order({{3, 4, 5}}, 0.5, 2, v, "chord");
    const auto row = m.distribution(std::vector<std::int32_t>{Vocabulary::kMask});
    for (double p : row) CHECK(p == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("distributions sum to one for random contexts") {
    Rng rng(11);
    const Corpus corpus = random_corpus(rng, 10, 24, 8);
    const auto songs = corpus.feature_sequences(0);
    const Vocabulary& v = corpus.vocabs[0];
    MarkovModel m1 = fit_first_order(songs, 0.01, v, "chord");
    VomModel mv = fit_variable_order(songs, 0.01, 4, v, "chord");
    for (int i = 0; i < 100; ++i) {
        std::vector<std::int32_t> ctx;
        const int len = static_cast<int>(rng.uniform_int(1, 8));
        for (int j = 0; j < len; ++j)
            ctx.push_back(static_cast<std::int32_t>(rng.uniform_int(0, v.size() - 1)));
        double s1 = 0, s2 = 0;
        for (double p : m1.distribution(ctx)) s1 += p;
        for (double p : mv.distribution(ctx)) s2 += p;
        CHECK(s1 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(s2 == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("both models match the brute-force oracle on random corpora") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const Corpus corpus = random_corpus(rng, 12, 16, 7);
        const auto songs = corpus.feature_sequences(0);
        const int v_size = corpus.vocabs[0].size();
        const double alpha = trial % 3 == 0 ? 0.0 : rng.log_uniform(1e-3, 1.0);
        const int order = static_cast<int>(rng.uniform_int(1, 5));
        MarkovModel m1 = fit_first_order(songs, alpha, corpus.vocabs[0], "chord");
        VomModel mv = fit_variable_order(songs, alpha, order, corpus.vocabs[0], "chord");
        for (const auto& song : songs) {
            for (std::size_t end = 1; end <= song.size(); ++end) {
                const std::span<const std::int32_t> ctx(song.data(), end);
                const auto got1 = m1.distribution(ctx);
                const auto want1 = oracle_distribution(songs, v_size, ctx, alpha, 1);
                const auto gotv = mv.distribution(ctx);
                const auto wantv = oracle_distribution(songs, v_size, ctx, alpha, order);
                for (int j = 0; j < v_size; ++j) {
                    CHECK(got1[static_cast<std::size_t>(j)] ==
                          doctest::Approx(want1[static_cast<std::size_t>(j)]).epsilon(1e-12));
                    CHECK(gotv[static_cast<std::size_t>(j)] ==
                          doctest::Approx(wantv[static_cast<std::size_t>(j)]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("order collapse: D=1 vom equals first order elementwise") {
    Rng rng(9);
    const Corpus corpus = random_corpus(rng, 8, 20, 6);
    const auto songs = corpus.feature_sequences(0);
    MarkovModel m1 = fit_first_order(songs, 0.25, corpus.vocabs[0], "chord");
    VomModel mv = fit_variable_order(songs, 0.25, 1, corpus.vocabs[0], "chord");
    for (int i = 0; i < 50; ++i) {
        std::vector<std::int32_t> ctx{
            static_cast<std::int32_t>(rng.uniform_int(0, corpus.vocabs[0].size() - 1))};
        const auto a = m1.distribution(ctx);
        const auto b = mv.distribution(ctx);
        for (std::size_t j = 0; j < a.size(); ++j)
            CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
    }
}

TEST_CASE("monotone specialization at alpha zero") {
    // once a full-length context was observed, unseen successors get zero mass
    Rng rng(31);
    const Corpus corpus = random_corpus(rng, 10, 18, 5);
    const auto songs = corpus.feature_sequences(0);
    VomModel m = fit_variable_order(songs, 0.0, 3, corpus.vocabs[0], "chord");
    for (const auto& [key, entry] : m.counts()) {
        const auto row = m.distribution(key);
        for (std::int32_t j = 0; j < corpus.vocabs[0].size(); ++j)
            if (!entry.succ.count(j)) CHECK(row[static_cast<std::size_t>(j)] == 0.0);
    }
}

TEST_CASE("pad stripping and mask handling") {
    Vocabulary v;
    const std::int32_t A = v.add("A"), B = v.add("B");
    MarkovModel m = fit_first_order({{A, B, A, B}}, 0.0, v, "chord");
    // leading PADs are ignored
    const std::vector<std::int32_t> padded{Vocabulary::kPad, Vocabulary::kPad, A};
    CHECK(m.distribution(padded)[static_cast<std::size_t>(B)] == 1.0);
    // MASK is an ordinary unseen symbol: uniform fallback at alpha=0
    const auto row = m.distribution(std::vector<std::int32_t>{Vocabulary::kMask});
    for (double p : row) CHECK(p == doctest::Approx(1.0 / 5.0));
}

TEST_CASE("argmax ties break toward the lowest id") {
    const std::vector<float> probs{0.2f, 0.5f, 0.3f};
    CHECK(argmax_lowest(std::span<const float>(probs)) == 1);
    const std::vector<float> tie{0.1f, 0.0f, 0.0f, 0.45f, 0.0f, 0.0f, 0.0f, 0.45f};
    CHECK(argmax_lowest(std::span<const float>(tie)) == 3);
}

TEST_CASE("predict_next follows an order-1 grammar") {
    Vocabulary v;
    const std::int32_t A = v.add("A"), B = v.add("B");
    MarkovModel m = fit_first_order({{A, B, A, B, A}}, 0.01, v, "chord");
    CHECK(predict_next(m, std::vector<std::int32_t>{A}) == B);
    CHECK(predict_next(m, std::vector<std::int32_t>{B}) == A);
}

TEST_CASE("empty corpus is rejected") {
    Vocabulary v = vocab_of(2);
    CHECK_THROWS_AS(fit_first_order({}, 0.1, v, "chord"), EmptyCorpus);
    CHECK_THROWS_AS(fit_variable_order({{3}}, 0.1, 2, v, "chord"), EmptyCorpus);
}

TEST_CASE("serialization round-trips both model types") {
    TmpDir tmp;
    Rng rng(45);
    const Corpus corpus = random_corpus(rng, 6, 14, 5);
    const auto songs = corpus.feature_sequences(0);
    VomModel mv = fit_variable_order(songs, 0.05, 3, corpus.vocabs[0], "chord");
    MarkovModel m1 = fit_first_order(songs, 0.05, corpus.vocabs[0], "chord");

    const std::string p1 = tmp.file("markov.json");
    const std::string pv = tmp.file("vom.json");
    m1.save(p1);
    mv.save(pv);
    const auto r1 = load_model(p1);
    const auto rv = load_model(pv);
    REQUIRE(r1->kind() == ModelKind::markov);
    REQUIRE(rv->kind() == ModelKind::vom);

    for (int i = 0; i < 20; ++i) {
        std::vector<std::int32_t> ctx;
        for (int j = 0; j < 3; ++j)
            ctx.push_back(static_cast<std::int32_t>(rng.uniform_int(0, corpus.vocabs[0].size() - 1)));
        const auto a = dynamic_cast<const VomModel&>(*rv).distribution(ctx);
        const auto b = mv.distribution(ctx);
        CHECK(a == b);
        const auto c = dynamic_cast<const MarkovModel&>(*r1).distribution(ctx);
        const auto d = m1.distribution(ctx);
        CHECK(c == d);
    }
}

TEST_SUITE_END();
