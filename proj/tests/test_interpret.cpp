#include <doctest.h>

#include <cmath>
#include <fstream>

#include "chordlab/errors.hpp"
#include "chordlab/metrics.hpp"
#include "chordlab/neural.hpp"
#include "chordlab/ngram.hpp"
#include "chordlab/occlusion.hpp"
#include "chordlab/trainer.hpp"
#include "grammars.hpp"
#include "tmpdir.hpp"

using namespace chordlab;
using namespace chordlab::testing;

TEST_SUITE_BEGIN("interpret");

namespace {

// Ignores its input entirely: always the same distribution.
class ConstantModel final : public PredictorModel {
public:
    ConstantModel(Vocabulary vocab, std::int32_t winner) : vocab_(std::move(vocab)) {
        row_.assign(static_cast<std::size_t>(vocab_.size()), 0.01f);
        row_[static_cast<std::size_t>(winner)] = 1.0f;
        float sum = 0;
        for (float x : row_) sum += x;
        for (float& x : row_) x /= sum;
    }
    ModelKind kind() const override { return ModelKind::markov; }
    const std::vector<std::string>& feature_names() const override { return features_; }
    const Vocabulary& vocab(int) const override { return vocab_; }
    int target_feature() const override { return 0; }
    HostTensor<float> predict(const TokenBatch& contexts) const override {
        HostTensor<float> out = HostTensor<float>::zeros({contexts.batch, vocab_.size()});
        for (int b = 0; b < contexts.batch; ++b)
            std::copy(row_.begin(), row_.end(),
                      out.data.begin() + static_cast<std::int64_t>(b) * vocab_.size());
        return out;
    }
    void save(const std::string&) const override {}

private:
    Vocabulary vocab_;
    std::vector<std::string> features_{"chord"};
    std::vector<float> row_;
};

}  // namespace

TEST_CASE("a constant model has exactly zero influence everywhere") {
    const Corpus corpus = cycle_corpus(4, 3, 10);
    const WindowSet windows = make_windows(corpus, 5, "chord");
    const ConstantModel model(corpus.vocabs[0], 3);  // always predicts token id 3
    const InfluenceProfile profile = position_influence(model, full_slice(windows));
    CHECK(profile.n > 0);
    for (double x : profile.influence) CHECK(x == 0.0);
}

TEST_CASE("first-order markov: influence peaks at -1 and vanishes at <= -2") {
    const Corpus corpus = cycle_corpus(5, 6, 14);
    const auto songs = corpus.feature_sequences(0);
    const MarkovModel model = fit_first_order(songs, 0.01, corpus.vocabs[0], "chord");
    const WindowSet windows = make_windows(corpus, 6, "chord");
    const InfluenceProfile profile = position_influence(model, full_slice(windows));
    REQUIRE(profile.context_len == 6);
    CHECK(profile.at_offset(-1) > 0.1);
    for (int off = -6; off <= -2; ++off) CHECK(std::abs(profile.at_offset(off)) <= 1e-9);
    // the argmax of the profile sits at the final position
    int best = 0;
    for (int i = 1; i < 6; ++i)
        if (profile.influence[static_cast<std::size_t>(i)] >
            profile.influence[static_cast<std::size_t>(best)])
            best = i;
    CHECK(best == 5);
}

TEST_CASE("masking a PAD position is a real perturbation") {
    // untrained LSTM reacts to PAD -> MASK swaps in the padded region
    const Corpus corpus = cycle_corpus(4, 2, 5);
    const WindowSet windows = make_windows(corpus, 8, "chord");  // all contexts padded
    Hyperparams hp;
    hp.embed_dim = 8;
    hp.hidden_dim = 8;
    hp.layers = 1;
    hp.context_len = 8;
    hp.dropout = 0;
    const NeuralModel model(ModelKind::lstm, hp, {"chord"}, {corpus.vocabs[0]}, 0, 3);
    const InfluenceProfile profile = position_influence(model, full_slice(windows));
    CHECK(profile.at_offset(-8) > 0.0);
}

TEST_CASE("conditioning on correct predictions is idempotent") {
    const Corpus corpus = order2_corpus(5, 6, 20);
    const auto songs = corpus.feature_sequences(0);
    const VomModel model = fit_variable_order(songs, 0.01, 3, corpus.vocabs[0], "chord");
    const WindowSet windows = make_windows(corpus, 5, "chord");
    const WindowSlice all = full_slice(windows);
    const InfluenceProfile full = position_influence(model, all);

    // pre-filtering the incorrectly-predicted samples changes nothing
    WindowSlice correct_only{&windows, {}};
    const int v = model.target_vocab_size();
    for (std::int64_t i = 0; i < all.size(); ++i) {
        const TokenBatch b = all.gather(i, 1);
        const HostTensor<float> probs = model.predict(b);
        if (argmax_lowest(std::span<const float>(probs.data.data(), static_cast<std::size_t>(v))) ==
            windows.targets[static_cast<std::size_t>(i)])
            correct_only.idx.push_back(i);
    }
    const InfluenceProfile filtered = position_influence(model, correct_only);
    CHECK(full.n == filtered.n);
    CHECK(full.influence == filtered.influence);
}

TEST_CASE("profiles are bitwise deterministic") {
    const Corpus corpus = cycle_corpus(5, 5, 12);
    const MarkovModel model =
        fit_first_order(corpus.feature_sequences(0), 0.05, corpus.vocabs[0], "chord");
    const WindowSet windows = make_windows(corpus, 4, "chord");
    const InfluenceProfile a = position_influence(model, full_slice(windows));
    const InfluenceProfile b = position_influence(model, full_slice(windows));
    CHECK(a.influence == b.influence);
}

TEST_CASE("no correct predictions raises") {
    const Corpus corpus = cycle_corpus(4, 2, 8);
    // constant model predicting PAD, which never appears as a target
    const ConstantModel model(corpus.vocabs[0], Vocabulary::kPad);
    const WindowSet windows = make_windows(corpus, 4, "chord");
    CHECK_THROWS_AS(position_influence(model, full_slice(windows)), NoCorrectPredictions);
}

TEST_CASE("single correct sample: profile equals that sample's deltas") {
    Vocabulary v;
    const std::int32_t A = v.add("A"), B = v.add("B"), C = v.add("C");
    const MarkovModel model = fit_first_order({{A, B}}, 0.0, v, "chord");
    // windows from [A,B] and [A,C]: only A->B is predicted correctly
    const Corpus eval_corpus = corpus_from_rows({"chord"}, {{"A B"}, {"A C"}});
    (void)C;
    const WindowSet windows = make_windows(eval_corpus, 2, "chord");
    REQUIRE(windows.size() == 2);
    const InfluenceProfile profile = position_influence(model, full_slice(windows));
    CHECK(profile.n == 1);
    // masking -1 replaces A by MASK: p(B) drops from 1 to uniform 1/6
    CHECK(profile.at_offset(-1) == doctest::Approx(1.0 - 1.0 / 6.0));
    CHECK(profile.at_offset(-2) == 0.0);
}

TEST_CASE("feature attribution needs a multi-feature model") {
    const Corpus corpus = cycle_corpus(4, 3, 8);
    const MarkovModel model =
        fit_first_order(corpus.feature_sequences(0), 0.01, corpus.vocabs[0], "chord");
    const WindowSet windows = make_windows(corpus, 4, "chord");
    CHECK_THROWS_AS(feature_attribution(model, full_slice(windows)), NotMultiFeature);
}

TEST_CASE("melody-dependent grammar attributes to melody at -1") {
    const Corpus corpus = melody_dependent_corpus(11, 10, 30);
    const WindowSet windows = make_windows(corpus, 5, "chord");
    Hyperparams hp;
    hp.embed_dim = 12;
    hp.hidden_dim = 24;
    hp.layers = 1;
    hp.context_len = 5;
    hp.dropout = 0.0f;
    NeuralModel model(ModelKind::multi_lstm, hp, corpus.features, corpus.vocabs, 0, 4);

    std::vector<int> train_songs{0, 1, 2, 3, 4, 5, 6, 7}, val_songs{8, 9};
    TrainConfig cfg;
    cfg.batch = 32;
    cfg.max_epochs = 60;
    cfg.patience = 60;
    cfg.lr = 5e-3;
    cfg.stop_accuracy = 0.995;
    train_model(model, slice_by_song(windows, train_songs), slice_by_song(windows, val_songs), cfg);
    REQUIRE(prediction_accuracy(model, slice_by_song(windows, val_songs), 64) >= 0.95);

    const AttributionGrid grid = feature_attribution(model, slice_by_song(windows, val_songs));
    REQUIRE(grid.features == corpus.features);
    const double melody_last = grid.at(1, -1);
    for (int off = -5; off <= -1; ++off) {
        CHECK(melody_last > grid.at(0, off));  // beats every chord cell
        CHECK(grid.at(2, off) < 0.05);         // duration row is noise
    }
}

TEST_CASE("profile exports: csv rows and json round-trip") {
    TmpDir tmp;
    InfluenceProfile profile;
    profile.context_len = 4;
    profile.influence = {0.0, 0.125, 0.25, 0.5};
    profile.n = 17;

    const std::string csv = tmp.file("profile.csv");
    export_profile(profile, csv, ExportFormat::csv);
    std::ifstream in(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);  // header + 4 data rows
    CHECK(lines[0] == "position,influence");
    CHECK(lines[1] == "-4,0");
    CHECK(lines[4] == "-1,0.5");

    const std::string js = tmp.file("profile.json");
    export_profile(profile, js, ExportFormat::json);
    const InfluenceProfile back = load_profile_json(js);
    CHECK(back.influence == profile.influence);
    CHECK(back.n == profile.n);
}

TEST_CASE("grid exports: csv ordering, series files, empty grid") {
    TmpDir tmp;
    AttributionGrid grid;
    grid.features = {"chord", "melody"};
    grid.context_len = 2;
    grid.values = {0.5, 0.25, 0.125, 0.0625};
    grid.n = 3;

    const std::string csv = tmp.file("grid.csv");
    export_grid(grid, csv, ExportFormat::csv);
    std::ifstream in(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "feature,position,influence");
    CHECK(lines[1] == "chord,-2,0.5");
    CHECK(lines[4] == "melody,-1,0.0625");

    const std::string js = tmp.file("grid.json");
    export_grid(grid, js, ExportFormat::json);
    const AttributionGrid back = load_grid_json(js);
    CHECK(back.values == grid.values);

    export_grid_series(grid, tmp.dir(), "series");
    CHECK(std::ifstream(tmp.file("series_chord.csv")).good());
    CHECK(std::ifstream(tmp.file("series_melody.csv")).good());

    AttributionGrid empty;
    const std::string empty_csv = tmp.file("empty.csv");
    export_grid(empty, empty_csv, ExportFormat::csv);
    std::ifstream ein(empty_csv);
    lines.clear();
    while (std::getline(ein, line)) lines.push_back(line);
    REQUIRE(lines.size() == 1);  // header only
}

TEST_SUITE_END();
