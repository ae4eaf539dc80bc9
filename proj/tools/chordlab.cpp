// chordlab: next-chord prediction laboratory.
//
// Subcommands: ingest | train | xval | search | interpret | report.
// Exit codes: 0 success, 2 usage/validation error, 1 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "chordlab/checkpoint.hpp"
#include "chordlab/chord.hpp"
#include "chordlab/corpus.hpp"
#include "chordlab/crossval.hpp"
#include "chordlab/errors.hpp"
#include "chordlab/metrics.hpp"
#include "chordlab/neural.hpp"
#include "chordlab/ngram.hpp"
#include "chordlab/occlusion.hpp"
#include "chordlab/runstore.hpp"
#include "chordlab/trainer.hpp"
#include "chordlab/window.hpp"
#include "chordlab/word2vec.hpp"

namespace {

using namespace chordlab;

struct CommonOpts {
    std::string corpus_path;
    std::string format = "tokens";
    std::string model;
    std::string target = "chord";
    std::string dataset;
    std::string store = "runs.jsonl";
    std::string out;
    std::uint64_t seed = 42;
    int jobs = 1;
    Hyperparams hp;
    TrainConfig cfg;
};

void add_store_option(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--store", opts.store, "Run store path (JSON lines, append-only)")
        ->envname("CHORDLAB_STORE")
        ->capture_default_str();
}

void add_corpus_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--corpus", opts.corpus_path, "Corpus file (canonical text format)")
        ->required();
    cmd->add_option("--format", opts.format, "Corpus format")
        ->check(CLI::IsMember({"tokens", "harte"}))
        ->capture_default_str();
    cmd->add_option("--target", opts.target, "Target feature to predict")
        ->capture_default_str();
    cmd->add_option("--dataset", opts.dataset, "Dataset tag recorded in the run store");
}

void add_model_option(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--model", opts.model, "Model kind")
        ->required()
        ->check(CLI::IsMember(all_model_kind_names()));
}

void add_hyper_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--embed-dim", opts.hp.embed_dim, "Embedding dimension")
        ->capture_default_str();
    cmd->add_option("--hidden-dim", opts.hp.hidden_dim, "Hidden / feedforward dimension")
        ->capture_default_str();
    cmd->add_option("--layers", opts.hp.layers, "Stacked layers")->capture_default_str();
    cmd->add_option("--heads", opts.hp.heads, "Attention heads")->capture_default_str();
    cmd->add_option("--context-len", opts.hp.context_len, "Context window length (events)")
        ->capture_default_str();
    cmd->add_option("--dropout", opts.hp.dropout, "Dropout rate")->capture_default_str();
    cmd->add_option("--alpha", opts.hp.alpha, "Additive smoothing (statistical models)")
        ->capture_default_str();
    cmd->add_option("--max-order", opts.hp.max_order, "Maximum context order (vom)")
        ->capture_default_str();
}

void add_train_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--lr", opts.cfg.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch", opts.cfg.batch, "Batch size")->capture_default_str();
    cmd->add_option("--epochs", opts.cfg.max_epochs, "Maximum training epochs")
        ->capture_default_str();
    cmd->add_option("--patience", opts.cfg.patience, "Early-stopping patience (epochs)")
        ->capture_default_str();
    cmd->add_option("--clip-norm", opts.cfg.clip_norm, "Gradient clip norm (<=0 disables)")
        ->capture_default_str();
}

ModelKind parse_kind(const std::string& name) {
    const auto kind = model_kind_from_string(name);
    if (!kind) {
        std::string names;
        for (const auto& n : all_model_kind_names()) names += " " + n;
        throw Error("unknown model kind '" + name + "'; valid kinds:" + names);
    }
    return *kind;
}

Corpus load(const CommonOpts& opts) {
    return load_corpus(opts.corpus_path,
                       opts.format == "harte" ? CorpusFormat::harte : CorpusFormat::tokens);
}

std::string dataset_tag(const CommonOpts& opts) {
    if (!opts.dataset.empty()) return opts.dataset;
    return std::filesystem::path(opts.corpus_path).filename().string();
}

void print_metrics(const MetricReport& m) {
    std::printf("accuracy   %.10f\n", m.accuracy);
    std::printf("perplexity %.10f\n", m.perplexity);
    std::printf("similarity %.10f\n", m.similarity);
    std::printf("n          %lld\n", static_cast<long long>(m.n));
}

// ---- ingest ----

int cmd_ingest(const CommonOpts& opts, const std::string& input, const std::string& normalize) {
    const Corpus corpus =
        load_corpus(input, opts.format == "harte" ? CorpusFormat::harte : CorpusFormat::tokens,
                    normalize_policy_from_string(normalize));
    if (!opts.out.empty()) {
        const auto parent = std::filesystem::path(opts.out).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        write_corpus(corpus, opts.out);
    }
    std::printf("songs %d\n", corpus.num_songs());
    std::printf("events %lld\n", static_cast<long long>(corpus.total_events()));
    for (int f = 0; f < corpus.num_features(); ++f) {
        std::int64_t tokens = 0;
        for (const auto& song : corpus.songs)
            tokens += static_cast<std::int64_t>(song[static_cast<std::size_t>(f)].size());
        std::printf("feature %s vocab %d tokens %lld\n",
                    corpus.features[static_cast<std::size_t>(f)].c_str(),
                    corpus.vocabs[static_cast<std::size_t>(f)].size(),
                    static_cast<long long>(tokens));
    }
    if (!opts.out.empty()) std::printf("wrote %s\n", opts.out.c_str());
    return 0;
}

// ---- train ----

int cmd_train(CommonOpts& opts) {
    const ModelKind kind = parse_kind(opts.model);
    const Corpus corpus = load(opts);
    const std::string target = resolve_target(corpus, opts.target);
    const int n = corpus.num_songs();
    const int min_songs = is_statistical(kind) ? 2 : 3;
    if (n < min_songs)
        throw InvalidK("train needs at least " + std::to_string(min_songs) + " songs for " +
                       opts.model + ", corpus has " + std::to_string(n));

    // deterministic song split: ~20% test, ~20% of the rest validation
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng = Rng(opts.seed).split("train-split");
    rng.shuffle(order);
    const int n_test = std::max(1, n / 5);
    const int n_val = is_statistical(kind) ? 0 : std::max(1, (n - n_test) / 5);
    const std::vector<int> test(order.begin(), order.begin() + n_test);
    const std::vector<int> val(order.begin() + n_test, order.begin() + n_test + n_val);
    const std::vector<int> train(order.begin() + n_test + n_val, order.end());

    std::printf("# chordlab train\n# seed %llu  model %s  corpus %s  target %s\n",
                static_cast<unsigned long long>(opts.seed), opts.model.c_str(),
                opts.corpus_path.c_str(), target.c_str());

    opts.cfg.seed = opts.seed;
    const ModelSpec spec{kind, opts.hp};
    const FitOutcome fit = fit_predictor(spec, corpus, train, val, opts.cfg, target);

    // embeddings from the non-test songs only
    std::vector<int> embed_songs = train;
    embed_songs.insert(embed_songs.end(), val.begin(), val.end());
    const int target_index = corpus.feature_index(target);
    const ChordEmbeddings emb = train_embeddings(
        corpus.feature_sequences(target_index, embed_songs),
        corpus.vocabs[static_cast<std::size_t>(target_index)].size(), Word2VecConfig{},
        Rng(opts.seed).split("w2v").next_u64());

    const WindowSet windows = make_windows(corpus, opts.hp.context_len, target);
    const MetricReport report = evaluate(*fit.model, slice_by_song(windows, test), emb);
    print_metrics(report);

    const std::string out_dir = opts.out.empty() ? "out" : opts.out;
    std::filesystem::create_directories(out_dir);
    const std::string ckpt = out_dir + "/" + opts.model + ".json";
    fit.model->save(ckpt);
    save_embeddings(emb, out_dir + "/w2v.json");
    std::printf("checkpoint %s\n", ckpt.c_str());

    RunRecord rec;
    rec.run_id = new_ulid();
    rec.kind = opts.model;
    rec.dataset = dataset_tag(opts);
    rec.seed = opts.seed;
    rec.k = 1;
    rec.hp = opts.hp;
    rec.lr = opts.cfg.lr;
    rec.batch = opts.cfg.batch;
    rec.max_epochs = opts.cfg.max_epochs;
    rec.patience = opts.cfg.patience;
    rec.clip_norm = opts.cfg.clip_norm;
    rec.folds.push_back({0, report});
    rec.checkpoints.push_back(ckpt);
    aggregate_folds(rec);
    record_run(rec, opts.store);
    return 0;
}

// ---- xval ----

int cmd_xval(CommonOpts& opts, int k, bool save_checkpoints) {
    const ModelKind kind = parse_kind(opts.model);
    const Corpus corpus = load(opts);
    opts.cfg.seed = opts.seed;
    EvalConfig eval_cfg;
    eval_cfg.target_feature = opts.target;

    std::string ckpt_dir;
    if (save_checkpoints) {
        ckpt_dir = opts.out.empty() ? "out" : opts.out;
        std::filesystem::create_directories(ckpt_dir);
    }

    std::printf("# chordlab xval\n# seed %llu  model %s  corpus %s  k %d\n",
                static_cast<unsigned long long>(opts.seed), opts.model.c_str(),
                opts.corpus_path.c_str(), k);
    const RunRecord rec = cross_validate({kind, opts.hp}, corpus, k, opts.cfg, eval_cfg,
                                         dataset_tag(opts), opts.jobs, ckpt_dir);

    std::printf("%-6s %-14s %-14s %-14s %s\n", "fold", "accuracy", "perplexity", "similarity",
                "n");
    for (const auto& f : rec.folds)
        std::printf("%-6d %-14.10f %-14.10f %-14.10f %lld\n", f.fold, f.metrics.accuracy,
                    f.metrics.perplexity, f.metrics.similarity,
                    static_cast<long long>(f.metrics.n));
    std::printf("%-6s %-14.10f %-14.10f %-14.10f %lld\n", "mean", rec.mean.accuracy,
                rec.mean.perplexity, rec.mean.similarity, static_cast<long long>(rec.mean.n));
    std::printf("%-6s %-14.10f %-14.10f %-14.10f\n", "std", rec.stddev.accuracy,
                rec.stddev.perplexity, rec.stddev.similarity);
    if (rec.status != "ok") std::printf("status %s\n", rec.status.c_str());
    record_run(rec, opts.store);
    return 0;
}

// ---- search ----

int cmd_search(CommonOpts& opts, int trials, int k) {
    const ModelKind kind = parse_kind(opts.model);
    const Corpus corpus = load(opts);
    opts.cfg.seed = opts.seed;
    EvalConfig eval_cfg;
    eval_cfg.target_feature = opts.target;
    const SearchSpace space;

    std::printf("# chordlab search\n# seed %llu  model %s  corpus %s  trials %d  k %d\n",
                static_cast<unsigned long long>(opts.seed), opts.model.c_str(),
                opts.corpus_path.c_str(), trials, k);
    const SearchResult result = search(kind, corpus, space, trials, k, opts.hp, opts.cfg,
                                       eval_cfg, dataset_tag(opts), opts.jobs);
    for (const RunRecord& t : result.trials) {
        std::printf("trial %-3d acc %.10f perp %.10f sim %.10f status %s\n", t.trial,
                    t.mean.accuracy, t.mean.perplexity, t.mean.similarity, t.status.c_str());
        record_run(t, opts.store);
    }
    std::printf("best trial %d\n", result.best.trial);
    print_metrics(result.best.mean);
    return 0;
}

// ---- interpret ----

int cmd_interpret(CommonOpts& opts, const std::string& checkpoint, const std::string& mode) {
    const auto model = load_model(checkpoint);
    Corpus corpus = load(opts);

    // re-encode the corpus into the checkpoint's vocabularies
    std::vector<Vocabulary> vocabs;
    for (int f = 0; f < model->num_features(); ++f) vocabs.push_back(model->vocab(f));
    corpus = reencode(corpus, model->feature_names(), vocabs);

    int context_len = opts.hp.context_len;
    if (const auto* neural = dynamic_cast<const NeuralModel*>(model.get()))
        context_len = neural->hyperparams().context_len;
    const std::string target =
        model->feature_names()[static_cast<std::size_t>(model->target_feature())];
    const WindowSet windows = make_windows(corpus, context_len, target);

    const std::string out_dir = opts.out.empty() ? "interpret" : opts.out;
    std::filesystem::create_directories(out_dir);

    std::printf("# chordlab interpret\n# seed %llu  mode %s  checkpoint %s\n",
                static_cast<unsigned long long>(opts.seed), mode.c_str(), checkpoint.c_str());
    if (mode == "positions") {
        const InfluenceProfile profile = position_influence(*model, full_slice(windows));
        export_profile(profile, out_dir + "/positions.csv", ExportFormat::csv);
        export_profile(profile, out_dir + "/positions.json", ExportFormat::json);
        std::printf("n %lld\n", static_cast<long long>(profile.n));
        for (int pos = 0; pos < profile.context_len; ++pos)
            std::printf("position %d influence %.10f\n", pos - profile.context_len,
                        profile.influence[static_cast<std::size_t>(pos)]);
        std::printf("wrote %s/positions.csv %s/positions.json\n", out_dir.c_str(),
                    out_dir.c_str());
    } else {
        const AttributionGrid grid = feature_attribution(*model, full_slice(windows));
        export_grid(grid, out_dir + "/features.csv", ExportFormat::csv);
        export_grid(grid, out_dir + "/features.json", ExportFormat::json);
        export_grid_series(grid, out_dir, "features");
        std::printf("n %lld\n", static_cast<long long>(grid.n));
        for (std::size_t f = 0; f < grid.features.size(); ++f)
            for (int pos = 0; pos < grid.context_len; ++pos)
                std::printf("feature %s position %d influence %.10f\n", grid.features[f].c_str(),
                            pos - grid.context_len,
                            grid.at(static_cast<int>(f), pos - grid.context_len));
        std::printf("wrote %s/features.csv %s/features.json\n", out_dir.c_str(), out_dir.c_str());
    }
    return 0;
}

// ---- report ----

int cmd_report(const CommonOpts& opts, const std::string& filter_kind,
               const std::string& filter_dataset) {
    RunFilter filter;
    filter.kind = filter_kind;
    filter.dataset = filter_dataset;
    const std::vector<RunRecord> runs = list_runs(opts.store, filter);
    if (runs.empty()) {
        std::printf("no runs\n");
        return 0;
    }

    // best ok-status record per model kind: highest accuracy, ties by perplexity
    std::vector<const RunRecord*> best;
    std::vector<int> counts;
    std::vector<std::string> kinds;
    for (const RunRecord& r : runs) {
        std::size_t slot = kinds.size();
        for (std::size_t i = 0; i < kinds.size(); ++i)
            if (kinds[i] == r.kind) slot = i;
        if (slot == kinds.size()) {
            kinds.push_back(r.kind);
            best.push_back(nullptr);
            counts.push_back(0);
        }
        ++counts[slot];
        if (r.status != "ok") continue;
        const RunRecord* cur = best[slot];
        if (!cur || r.mean.accuracy > cur->mean.accuracy ||
            (r.mean.accuracy == cur->mean.accuracy && r.mean.perplexity < cur->mean.perplexity))
            best[slot] = &r;
    }

    std::printf("# chordlab report\n# store %s  seed %llu\n", opts.store.c_str(),
                static_cast<unsigned long long>(opts.seed));
    std::printf("%-18s %-6s %-10s %-12s %-10s %s\n", "model", "runs", "accuracy", "perplexity",
                "similarity", "dataset");
    std::string csv = "model,runs,accuracy,perplexity,similarity,dataset\n";
    char line[256];
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (!best[i]) continue;
        const RunRecord& r = *best[i];
        std::printf("%-18s %-6d %-10.6f %-12.6f %-10.6f %s\n", kinds[i].c_str(), counts[i],
                    r.mean.accuracy, r.mean.perplexity, r.mean.similarity, r.dataset.c_str());
        std::snprintf(line, sizeof line, "%s,%d,%.6f,%.6f,%.6f,%s\n", kinds[i].c_str(), counts[i],
                      r.mean.accuracy, r.mean.perplexity, r.mean.similarity, r.dataset.c_str());
        csv += line;
    }
    const std::string csv_path = opts.out.empty() ? "report.csv" : opts.out;
    const auto parent = std::filesystem::path(csv_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + csv_path);
    out << csv;
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
}

bool usage_error(const std::exception& e) {
    return dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
           dynamic_cast<const InvalidK*>(&e) || dynamic_cast<const UnknownFeature*>(&e) ||
           dynamic_cast<const NotMultiFeature*>(&e) || dynamic_cast<const VersionMismatch*>(&e) ||
           dynamic_cast<const CorruptCheckpoint*>(&e) || dynamic_cast<const EmptyCorpus*>(&e) ||
           dynamic_cast<const IoError*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chordlab: statistical and neural next-chord prediction laboratory"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (key=value sections mirror the flags)");

    CommonOpts opts;
    std::string input, normalize = "no_inversion", mode = "positions", checkpoint;
    std::string filter_kind, filter_dataset;
    int k = 5, trials = 10;
    bool save_checkpoints = false;

    CLI::App* ingest = app.add_subcommand("ingest", "Parse a corpus and write the canonical form");
    ingest->add_option("--input", input, "Input corpus file")->required();
    ingest->add_option("--format", opts.format, "Input format")
        ->check(CLI::IsMember({"tokens", "harte"}))
        ->capture_default_str();
    ingest->add_option("--normalize", normalize, "Chord normalization policy")
        ->check(CLI::IsMember({"full", "no_inversion", "root_quality"}))
        ->capture_default_str();
    ingest->add_option("--out", opts.out, "Canonical corpus output path");

    CLI::App* train = app.add_subcommand("train", "Train one model and write a checkpoint");
    add_corpus_options(train, opts);
    add_model_option(train, opts);
    add_hyper_options(train, opts);
    add_train_options(train, opts);
    add_store_option(train, opts);
    train->add_option("--out", opts.out, "Output directory for checkpoints");

    CLI::App* xval = app.add_subcommand("xval", "Song-level k-fold cross-validation");
    add_corpus_options(xval, opts);
    add_model_option(xval, opts);
    add_hyper_options(xval, opts);
    add_train_options(xval, opts);
    add_store_option(xval, opts);
    xval->add_option("--k", k, "Number of folds")->capture_default_str();
    xval->add_option("--out", opts.out, "Checkpoint directory (with --save-checkpoints)");
    xval->add_flag("--save-checkpoints", save_checkpoints, "Save each fold model");

    CLI::App* search_cmd = app.add_subcommand("search", "Random hyperparameter search");
    add_corpus_options(search_cmd, opts);
    add_model_option(search_cmd, opts);
    add_hyper_options(search_cmd, opts);
    add_train_options(search_cmd, opts);
    add_store_option(search_cmd, opts);
    search_cmd->add_option("--trials", trials, "Number of trials")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    search_cmd->add_option("--k", k, "Folds per trial")->capture_default_str();

    CLI::App* interpret = app.add_subcommand("interpret", "Occlusion sensitivity exports");
    interpret->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    add_corpus_options(interpret, opts);
    interpret->add_option("--mode", mode, "positions (offsets) or features (grid)")
        ->check(CLI::IsMember({"positions", "features"}))
        ->capture_default_str();
    interpret->add_option("--window", opts.hp.context_len,
                          "Window length for statistical checkpoints")
        ->capture_default_str();
    interpret->add_option("--out", opts.out, "Output directory");

    CLI::App* report = app.add_subcommand("report", "Best-per-model comparison table");
    add_store_option(report, opts);
    report->add_option("--model", filter_kind, "Filter by model kind");
    report->add_option("--dataset", filter_dataset, "Filter by dataset tag");
    report->add_option("--out", opts.out, "CSV output path");

    for (CLI::App* cmd : {ingest, train, xval, search_cmd, interpret, report}) {
        cmd->add_option("--seed", opts.seed, "Global random seed")->capture_default_str();
        cmd->add_option("--jobs", opts.jobs, "Parallel folds/trials")->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(opts, input, normalize);
        if (app.got_subcommand(train)) return cmd_train(opts);
        if (app.got_subcommand(xval)) return cmd_xval(opts, k, save_checkpoints);
        if (app.got_subcommand(search_cmd)) return cmd_search(opts, trials, k);
        if (app.got_subcommand(interpret)) return cmd_interpret(opts, checkpoint, mode);
        if (app.got_subcommand(report)) return cmd_report(opts, filter_kind, filter_dataset);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return usage_error(e) ? 2 : 1;
    }
    return 0;
}
