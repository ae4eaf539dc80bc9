#include "chordlab/runstore.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>

#include "chordlab/errors.hpp"
#include "chordlab/rng.hpp"
#include "json_util.hpp"

namespace chordlab {
namespace {

using nlohmann::json;

json metrics_to_json(const MetricReport& m) {
    return json{{"accuracy", m.accuracy},
                {"perplexity", m.perplexity},
                {"similarity", m.similarity},
                {"n", m.n},
                {"clamped", m.clamped}};
}

MetricReport metrics_from_json(const json& j) {
    MetricReport m;
    m.accuracy = j.at("accuracy").get<double>();
    m.perplexity = j.at("perplexity").get<double>();
    m.similarity = j.at("similarity").get<double>();
    m.n = j.at("n").get<std::int64_t>();
    m.clamped = j.at("clamped").get<std::int64_t>();
    return m;
}

json record_to_json(const RunRecord& r) {
    json folds = json::array();
    for (const auto& f : r.folds)
        folds.push_back(json{{"fold", f.fold}, {"metrics", metrics_to_json(f.metrics)}});
    return json{
        {"run_id", r.run_id},
        {"kind", r.kind},
        {"dataset", r.dataset},
        {"status", r.status},
        {"seed", r.seed},
        {"k", r.k},
        {"trial", r.trial},
        {"hyperparams", hyperparams_to_json(r.hp)},
        {"train", json{{"lr", r.lr},
                       {"batch", r.batch},
                       {"max_epochs", r.max_epochs},
                       {"patience", r.patience},
                       {"clip_norm", r.clip_norm}}},
        {"folds", folds},
        {"mean", metrics_to_json(r.mean)},
        {"stddev", metrics_to_json(r.stddev)},
        {"wall_time_s", r.wall_time_s},
        {"checkpoints", r.checkpoints},
    };
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.k = j.at("k").get<int>();
    r.trial = j.at("trial").get<int>();
    r.hp = hyperparams_from_json(j.at("hyperparams"));
    const json& t = j.at("train");
    r.lr = t.at("lr").get<double>();
    r.batch = t.at("batch").get<int>();
    r.max_epochs = t.at("max_epochs").get<int>();
    r.patience = t.at("patience").get<int>();
    r.clip_norm = t.at("clip_norm").get<double>();
    for (const auto& f : j.at("folds")) {
        FoldMetrics fm;
        fm.fold = f.at("fold").get<int>();
        fm.metrics = metrics_from_json(f.at("metrics"));
        r.folds.push_back(fm);
    }
    r.mean = metrics_from_json(j.at("mean"));
    r.stddev = metrics_from_json(j.at("stddev"));
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
    return r;
}

std::mutex store_mutex;

}  // namespace

std::string new_ulid() {
    static const char alphabet[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto ms =
        static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(now).count());

    static std::mutex mu;
    static Rng entropy = [] {
        std::random_device rd;
        return Rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    }();

    std::uint64_t rand_hi, rand_lo;
    {
        std::lock_guard<std::mutex> lk(mu);
        rand_hi = entropy.next_u64();
        rand_lo = entropy.next_u64();
    }

    char out[26];
    // 48-bit timestamp -> 10 chars
    for (int i = 9; i >= 0; --i) out[i] = alphabet[(ms >> (5 * (9 - i))) & 31];
    // 80 random bits -> 16 chars
    std::uint64_t hi16 = rand_hi & 0xFFFF;  // top 16 bits of randomness
    for (int i = 0; i < 3; ++i) out[10 + i] = alphabet[(hi16 >> (5 * (2 - i))) & 31];
    for (int i = 0; i < 13; ++i) out[13 + i] = alphabet[(rand_lo >> (5 * (12 - i))) & 31];
    return std::string(out, 26);
}

void aggregate_folds(RunRecord& record) {
    const auto n = static_cast<double>(record.folds.size());
    if (record.folds.empty()) return;
    auto mean_of = [&](auto get) {
        double s = 0;
        for (const auto& f : record.folds) s += get(f.metrics);
        return s / n;
    };
    auto std_of = [&](auto get, double mean) {
        double s = 0;
        for (const auto& f : record.folds) {
            const double d = get(f.metrics) - mean;
            s += d * d;
        }
        return std::sqrt(s / n);
    };
    auto acc = [](const MetricReport& m) { return m.accuracy; };
    auto perp = [](const MetricReport& m) { return m.perplexity; };
    auto sim = [](const MetricReport& m) { return m.similarity; };
    record.mean.accuracy = mean_of(acc);
    record.mean.perplexity = mean_of(perp);
    record.mean.similarity = mean_of(sim);
    record.stddev.accuracy = std_of(acc, record.mean.accuracy);
    record.stddev.perplexity = std_of(perp, record.mean.perplexity);
    record.stddev.similarity = std_of(sim, record.mean.similarity);
    std::int64_t total = 0, clamped = 0;
    for (const auto& f : record.folds) {
        total += f.metrics.n;
        clamped += f.metrics.clamped;
    }
    record.mean.n = total;
    record.mean.clamped = clamped;
}

void record_run(const RunRecord& record, const std::string& store_path) {
    std::lock_guard<std::mutex> lk(store_mutex);
    std::ofstream out(store_path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open run store: " + store_path);
    out << record_to_json(record).dump() << '\n';
    if (!out) throw IoError("run store append failed: " + store_path);
}

std::vector<RunRecord> list_runs(const std::string& store_path, const RunFilter& filter) {
    std::ifstream in(store_path, std::ios::binary);
    std::vector<RunRecord> out;
    if (!in) return out;  // absent store = no runs
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        RunRecord r;
        try {
            r = record_from_json(json::parse(line));
        } catch (const json::exception& e) {
            throw StoreCorrupt(e.what(), line_no);
        }
        if (!filter.kind.empty() && r.kind != filter.kind) continue;
        if (!filter.dataset.empty() && r.dataset != filter.dataset) continue;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace chordlab
