#include "chordlab/crossval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <cmath>
#include <thread>

#include "chordlab/errors.hpp"
#include "chordlab/ngram.hpp"

namespace chordlab {
namespace {

std::uint64_t derive_seed(std::uint64_t base, const char* label, std::uint64_t index) {
    return Rng(base).split(label).split(index).next_u64();
}

void check_disjoint(std::span<const int> a, std::span<const int> b, const char* what) {
    for (int x : a)
        for (int y : b)
            if (x == y) throw Error(std::string("song leakage between ") + what);
}

// Fold layout: the test fold is held out; one of the remaining folds becomes
// the validation set (k >= 3). At k=2 the single training fold donates ~20%
// of its songs instead (falling back to itself when it has only one song).
struct FoldPlan {
    std::vector<int> train, val, test;
};

FoldPlan plan_fold(const std::vector<Fold>& folds, int fold_index, std::uint64_t seed) {
    const int k = static_cast<int>(folds.size());
    FoldPlan plan;
    plan.test = folds[static_cast<std::size_t>(fold_index)].test_songs;
    if (k >= 3) {
        const int val_fold = (fold_index + 1) % k;
        plan.val = folds[static_cast<std::size_t>(val_fold)].test_songs;
        for (int f = 0; f < k; ++f)
            if (f != fold_index && f != val_fold)
                for (int s : folds[static_cast<std::size_t>(f)].test_songs)
                    plan.train.push_back(s);
        return plan;
    }
    std::vector<int> pool = folds[static_cast<std::size_t>(fold_index)].train_songs;
    if (pool.size() < 2) {
        plan.train = pool;
        plan.val = pool;
        return plan;
    }
    Rng rng = Rng(seed).split("valcarve").split(static_cast<std::uint64_t>(fold_index));
    rng.shuffle(pool);
    const auto n_val = std::max<std::size_t>(1, pool.size() / 5);
    plan.val.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
    plan.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
    std::sort(plan.val.begin(), plan.val.end());
    std::sort(plan.train.begin(), plan.train.end());
    return plan;
}

}  // namespace

std::string resolve_target(const Corpus& corpus, const std::string& requested) {
    if (!requested.empty())
        for (const auto& f : corpus.features)
            if (f == requested) return requested;
    if (corpus.features.empty()) throw EmptyCorpus("corpus has no features");
    return corpus.features[0];
}

FitOutcome fit_predictor(const ModelSpec& spec, const Corpus& corpus,
                         std::span<const int> train_songs, std::span<const int> val_songs,
                         const TrainConfig& cfg, const std::string& target_feature) {
    if (train_songs.empty()) throw EmptyCorpus("no training songs");
    const int target = corpus.feature_index(target_feature);
    FitOutcome out;

    if (is_statistical(spec.kind)) {
        auto sequences = corpus.feature_sequences(target, train_songs);
        const Vocabulary& vocab = corpus.vocabs[static_cast<std::size_t>(target)];
        if (spec.kind == ModelKind::markov)
            out.model = std::make_unique<MarkovModel>(
                fit_first_order(sequences, spec.hp.alpha, vocab, target_feature));
        else
            out.model = std::make_unique<VomModel>(fit_variable_order(
                sequences, spec.hp.alpha, spec.hp.max_order, vocab, target_feature));
        return out;
    }

    std::vector<std::string> features;
    std::vector<Vocabulary> vocabs;
    int model_target;
    if (is_multi_feature(spec.kind)) {
        features = corpus.features;
        vocabs = corpus.vocabs;
        model_target = target;
    } else {
        features = {target_feature};
        vocabs = {corpus.vocabs[static_cast<std::size_t>(target)]};
        model_target = 0;
    }

    auto model = std::make_unique<NeuralModel>(spec.kind, spec.hp, features, vocabs, model_target,
                                               derive_seed(cfg.seed, "init", 0));
    const WindowSet windows = make_windows(corpus, spec.hp.context_len, target_feature);
    const WindowSlice train = slice_by_song(windows, train_songs);
    const WindowSlice val = slice_by_song(windows, val_songs);
    out.log = train_model(*model, train, val, cfg);
    out.model = std::move(model);
    return out;
}

RunRecord cross_validate(const ModelSpec& spec, const Corpus& corpus, int k,
                         const TrainConfig& cfg, const EvalConfig& eval_cfg,
                         const std::string& dataset_tag, int jobs,
                         const std::string& checkpoint_dir, std::uint64_t split_seed) {
    if (k < 2) throw InvalidK("k must be >= 2");
    const auto t0 = std::chrono::steady_clock::now();
    if (split_seed == 0) split_seed = cfg.seed;
    const std::string target = resolve_target(corpus, eval_cfg.target_feature);
    const int target_index = corpus.feature_index(target);
    const std::vector<Fold> folds = split_kfold(corpus, k, split_seed);
    const WindowSet windows = make_windows(corpus, spec.hp.context_len, target);

    RunRecord record;
    record.run_id = new_ulid();
    record.kind = to_string(spec.kind);
    record.dataset = dataset_tag;
    record.seed = cfg.seed;
    record.k = k;
    record.hp = spec.hp;
    record.lr = cfg.lr;
    record.batch = cfg.batch;
    record.max_epochs = cfg.max_epochs;
    record.patience = cfg.patience;
    record.clip_norm = cfg.clip_norm;
    record.folds.resize(static_cast<std::size_t>(k));
    record.checkpoints.resize(static_cast<std::size_t>(k));

    std::atomic<bool> any_failed{false};
    auto run_fold = [&](int fold) {
        FoldMetrics& fm = record.folds[static_cast<std::size_t>(fold)];
        fm.fold = fold;
        try {
            const FoldPlan plan = plan_fold(folds, fold, split_seed);
            check_disjoint(plan.train, plan.test, "train and test");
            check_disjoint(plan.val, plan.test, "validation and test");

            TrainConfig fold_cfg = cfg;
            fold_cfg.seed = derive_seed(cfg.seed, "fold", static_cast<std::uint64_t>(fold));
            const FitOutcome fit =
                fit_predictor(spec, corpus, plan.train, plan.val, fold_cfg, target);

            // embeddings see only non-test songs
            std::vector<int> embed_songs = plan.train;
            for (int s : plan.val)
                if (!std::binary_search(plan.train.begin(), plan.train.end(), s))
                    embed_songs.push_back(s);
            std::sort(embed_songs.begin(), embed_songs.end());
            const ChordEmbeddings emb = train_embeddings(
                corpus.feature_sequences(target_index, embed_songs),
                corpus.vocabs[static_cast<std::size_t>(target_index)].size(), eval_cfg.w2v,
                derive_seed(split_seed, "w2v", static_cast<std::uint64_t>(fold)));

            const WindowSlice test = slice_by_song(windows, plan.test);
            fm.metrics = evaluate(*fit.model, test, emb);
            if (!checkpoint_dir.empty()) {
                const std::string path = checkpoint_dir + "/" + record.run_id + "_fold" +
                                         std::to_string(fold) + ".json";
                fit.model->save(path);
                record.checkpoints[static_cast<std::size_t>(fold)] = path;
            }
        } catch (const DivergedLoss&) {
            any_failed.store(true);
        }
    };

    if (jobs <= 1) {
        for (int fold = 0; fold < k; ++fold) run_fold(fold);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> workers;
        const int nw = std::min(jobs, k);
        workers.reserve(static_cast<std::size_t>(nw));
        std::exception_ptr first_error;
        std::mutex error_mu;
        for (int w = 0; w < nw; ++w)
            workers.emplace_back([&] {
                for (;;) {
                    const int fold = next.fetch_add(1);
                    if (fold >= k) return;
                    try {
                        run_fold(fold);
                    } catch (...) {
                        std::lock_guard<std::mutex> lk(error_mu);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        for (auto& t : workers) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    if (any_failed.load()) record.status = "failed";
    aggregate_folds(record);
    record.checkpoints.erase(
        std::remove(record.checkpoints.begin(), record.checkpoints.end(), std::string{}),
        record.checkpoints.end());
    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record;
}

Trial sample_trial(const SearchSpace& space, ModelKind kind, const Hyperparams& base_hp,
                   const TrainConfig& base_cfg, Rng& rng) {
    Trial trial;
    trial.hp = base_hp;
    trial.cfg = base_cfg;
    if (is_statistical(kind)) {
        trial.hp.alpha = rng.log_uniform(space.alpha.first, space.alpha.second);
        trial.hp.max_order =
            kind == ModelKind::vom
                ? static_cast<int>(rng.uniform_int(space.max_order.first, space.max_order.second))
                : 1;
        return trial;
    }
    trial.hp.layers = static_cast<int>(rng.uniform_int(space.layers.first, space.layers.second));
    trial.hp.embed_dim = static_cast<int>(std::lround(
        rng.log_uniform(static_cast<double>(space.embed_dim.first), static_cast<double>(space.embed_dim.second))));
    trial.hp.hidden_dim = static_cast<int>(std::lround(
        rng.log_uniform(static_cast<double>(space.hidden_dim.first), static_cast<double>(space.hidden_dim.second))));
    trial.hp.heads = space.heads[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(space.heads.size()) - 1))];
    const bool needs_heads = kind == ModelKind::transformer ||
                             kind == ModelKind::multi_transformer || is_gpt_family(kind);
    if (needs_heads) {
        // round the embedding dim up to a multiple of the head count
        const int h = trial.hp.heads;
        trial.hp.embed_dim = ((std::max(trial.hp.embed_dim, h) + h - 1) / h) * h;
    }
    trial.cfg.lr = rng.log_uniform(space.lr.first, space.lr.second);
    return trial;
}

SearchResult search(ModelKind kind, const Corpus& corpus, const SearchSpace& space, int trials,
                    int k, const Hyperparams& base_hp, const TrainConfig& base_cfg,
                    const EvalConfig& eval_cfg, const std::string& dataset_tag, int jobs) {
    if (trials < 1) throw Error("search needs at least one trial");
    SearchResult result;
    result.trials.resize(static_cast<std::size_t>(trials));

    auto run_trial = [&](int t) {
        Rng trial_rng = Rng(base_cfg.seed).split("search").split(static_cast<std::uint64_t>(t));
        Trial trial = sample_trial(space, kind, base_hp, base_cfg, trial_rng);
        trial.cfg.seed = derive_seed(base_cfg.seed, "trial", static_cast<std::uint64_t>(t));
        // trials share the fold partition: only training randomness varies
        RunRecord rec = cross_validate({kind, trial.hp}, corpus, k, trial.cfg, eval_cfg,
                                       dataset_tag, 1, "", base_cfg.seed);
        rec.trial = t;
        result.trials[static_cast<std::size_t>(t)] = std::move(rec);
    };

    if (jobs <= 1) {
        for (int t = 0; t < trials; ++t) run_trial(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> workers;
        const int nw = std::min(jobs, trials);
        std::exception_ptr first_error;
        std::mutex error_mu;
        for (int w = 0; w < nw; ++w)
            workers.emplace_back([&] {
                for (;;) {
                    const int t = next.fetch_add(1);
                    if (t >= trials) return;
                    try {
                        run_trial(t);
                    } catch (...) {
                        std::lock_guard<std::mutex> lk(error_mu);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        for (auto& t : workers) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    const RunRecord* best = nullptr;
    for (const RunRecord& rec : result.trials) {
        if (rec.status != "ok") continue;
        if (!best || rec.mean.accuracy > best->mean.accuracy ||
            (rec.mean.accuracy == best->mean.accuracy &&
             rec.mean.perplexity < best->mean.perplexity))
            best = &rec;
    }
    if (!best) throw Error("all search trials failed");
    result.best = *best;
    return result;
}

}  // namespace chordlab
