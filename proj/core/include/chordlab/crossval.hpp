#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chordlab/corpus.hpp"
#include "chordlab/runstore.hpp"
#include "chordlab/trainer.hpp"
#include "chordlab/word2vec.hpp"

namespace chordlab {

struct ModelSpec {
    ModelKind kind = ModelKind::markov;
    Hyperparams hp;
};

struct EvalConfig {
    Word2VecConfig w2v;
    std::string target_feature = "chord";  // falls back to the first feature
};

struct FitOutcome {
    std::unique_ptr<PredictorModel> model;
    TrainLog log;  // empty for statistical kinds
};

// "chord" if present, else the corpus' first feature.
std::string resolve_target(const Corpus& corpus, const std::string& requested);

// Fits one model on the given train songs (validation steers early stopping
// for neural kinds; statistical kinds ignore it).
FitOutcome fit_predictor(const ModelSpec& spec, const Corpus& corpus,
                         std::span<const int> train_songs, std::span<const int> val_songs,
                         const TrainConfig& cfg, const std::string& target_feature);

// Song-level k-fold cross-validation. Per fold: one training fold becomes the
// validation set (at k=2 a validation carve is taken from the train songs),
// embeddings are trained on the non-test songs, and the held-out fold is
// evaluated. Folds may run concurrently with `jobs` workers. When
// checkpoint_dir is non-empty every fold model is saved there. split_seed
// pins the fold partition and embedding seeds independently of the training
// seed (search passes the global seed so trials share folds); 0 means
// cfg.seed.
RunRecord cross_validate(const ModelSpec& spec, const Corpus& corpus, int k,
                         const TrainConfig& cfg, const EvalConfig& eval_cfg,
                         const std::string& dataset_tag, int jobs = 1,
                         const std::string& checkpoint_dir = "",
                         std::uint64_t split_seed = 0);

struct SearchSpace {
    std::pair<int, int> layers{1, 4};
    std::pair<int, int> embed_dim{16, 256};    // log scale
    std::pair<int, int> hidden_dim{32, 512};   // log scale
    std::pair<double, double> lr{1e-4, 1e-2};  // log scale
    std::vector<int> heads{1, 2, 4, 8};
    std::pair<double, double> alpha{1e-3, 1.0};  // log scale, statistical
    std::pair<int, int> max_order{1, 8};         // statistical
};

struct Trial {
    Hyperparams hp;
    TrainConfig cfg;
};

// Uniform / log-uniform sample; categorical dims from the listed sets.
Trial sample_trial(const SearchSpace& space, ModelKind kind, const Hyperparams& base_hp,
                   const TrainConfig& base_cfg, Rng& rng);

struct SearchResult {
    RunRecord best;
    std::vector<RunRecord> trials;
};

// Random search; each trial is a full cross-validation with its own derived
// seed. Best = highest mean accuracy, ties by lower mean perplexity; failed
// trials are recorded but never win.
SearchResult search(ModelKind kind, const Corpus& corpus, const SearchSpace& space, int trials,
                    int k, const Hyperparams& base_hp, const TrainConfig& base_cfg,
                    const EvalConfig& eval_cfg, const std::string& dataset_tag, int jobs = 1);

}  // namespace chordlab
