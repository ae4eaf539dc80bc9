#include "chordlab/occlusion.hpp"

#include <cstdio>
#include <fstream>

#include "chordlab/errors.hpp"
#include "chordlab/metrics.hpp"
#include <json.hpp>

namespace chordlab {
namespace {

struct CorrectSet {
    TokenBatch batch;                   // all correct samples, model-ready lanes
    std::vector<std::int32_t> targets;
    std::vector<double> p_original;
};

TokenBatch adapt(const PredictorModel& model, TokenBatch batch, int target_lane) {
    if (model.num_features() == 1 && batch.feats > 1)
        return extract_feature(batch, target_lane);
    return batch;
}

// First pass: keep only samples the unmasked model predicts correctly.
CorrectSet collect_correct(const PredictorModel& model, const WindowSlice& data, int batch_size) {
    if (data.size() == 0) throw EmptyInput("interpretation slice is empty");
    const int v = model.target_vocab_size();
    CorrectSet out;
    out.batch.len = data.set->context_len;
    out.batch.feats = model.num_features() == 1 ? 1 : data.set->num_features;

    for (std::int64_t start = 0; start < data.size(); start += batch_size) {
        const std::int64_t count = std::min<std::int64_t>(batch_size, data.size() - start);
        const TokenBatch b = adapt(model, data.gather(start, count), data.set->target_feature);
        const HostTensor<float> probs = model.predict(b);
        const auto targets = data.gather_targets(start, count);
        const std::int64_t stride = static_cast<std::int64_t>(b.len) * b.feats;
        for (std::int64_t i = 0; i < count; ++i) {
            const std::span<const float> row(probs.data.data() + i * v, static_cast<std::size_t>(v));
            const std::int32_t target = targets[static_cast<std::size_t>(i)];
            if (argmax_lowest(row) != target) continue;
            out.batch.tokens.insert(out.batch.tokens.end(), b.tokens.begin() + i * stride,
                                    b.tokens.begin() + (i + 1) * stride);
            out.targets.push_back(target);
            out.p_original.push_back(static_cast<double>(row[static_cast<std::size_t>(target)]));
        }
    }
    out.batch.batch = static_cast<int>(out.targets.size());
    if (out.batch.batch == 0)
        throw NoCorrectPredictions("model predicted nothing correctly; influence is undefined");
    return out;
}

// Mean |p_orig - p_masked| with `mutate` applying the mask to one sample.
template <typename Mutate>
double masked_delta(const PredictorModel& model, const CorrectSet& correct, int batch_size,
                    Mutate mutate) {
    const int v = model.target_vocab_size();
    const int n = correct.batch.batch;
    const std::int64_t stride =
        static_cast<std::int64_t>(correct.batch.len) * correct.batch.feats;
    std::vector<double> deltas(static_cast<std::size_t>(n));

    for (int start = 0; start < n; start += batch_size) {
        const int count = std::min(batch_size, n - start);
        TokenBatch b;
        b.batch = count;
        b.len = correct.batch.len;
        b.feats = correct.batch.feats;
        b.tokens.assign(correct.batch.tokens.begin() + start * stride,
                        correct.batch.tokens.begin() + (start + count) * stride);
        for (int i = 0; i < count; ++i) mutate(b, i);
        const HostTensor<float> probs = model.predict(b);
        for (int i = 0; i < count; ++i) {
            const std::int32_t target = correct.targets[static_cast<std::size_t>(start + i)];
            const double masked = static_cast<double>(
                probs.data[static_cast<std::size_t>(i) * v + static_cast<std::size_t>(target)]);
            deltas[static_cast<std::size_t>(start + i)] =
                std::abs(correct.p_original[static_cast<std::size_t>(start + i)] - masked);
        }
    }
    return pairwise_sum(deltas) / static_cast<double>(n);
}

}  // namespace

InfluenceProfile position_influence(const PredictorModel& model, const WindowSlice& data,
                                    int batch_size) {
    const CorrectSet correct = collect_correct(model, data, batch_size);
    InfluenceProfile profile;
    profile.context_len = correct.batch.len;
    profile.n = correct.batch.batch;
    profile.influence.resize(static_cast<std::size_t>(correct.batch.len));
    for (int pos = 0; pos < correct.batch.len; ++pos) {
        profile.influence[static_cast<std::size_t>(pos)] =
            masked_delta(model, correct, batch_size, [&](TokenBatch& b, int i) {
                for (int f = 0; f < b.feats; ++f) b.at(i, pos, f) = Vocabulary::kMask;
            });
    }
    return profile;
}

AttributionGrid feature_attribution(const PredictorModel& model, const WindowSlice& data,
                                    int batch_size) {
    if (model.num_features() < 2)
        throw NotMultiFeature("feature attribution needs a multi-feature model");
    const CorrectSet correct = collect_correct(model, data, batch_size);
    AttributionGrid grid;
    grid.features = model.feature_names();
    grid.context_len = correct.batch.len;
    grid.n = correct.batch.batch;
    grid.values.resize(grid.features.size() * static_cast<std::size_t>(grid.context_len));
    for (std::size_t f = 0; f < grid.features.size(); ++f) {
        for (int pos = 0; pos < grid.context_len; ++pos) {
            grid.values[f * static_cast<std::size_t>(grid.context_len) +
                        static_cast<std::size_t>(pos)] =
                masked_delta(model, correct, batch_size, [&](TokenBatch& b, int i) {
                    b.at(i, pos, static_cast<int>(f)) = Vocabulary::kMask;
                });
        }
    }
    return grid;
}

// ---- exports ----

namespace {

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    out << body;
    if (!out) throw IoError("write failed: " + path);
}

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

}  // namespace

void export_profile(const InfluenceProfile& profile, const std::string& path, ExportFormat fmt) {
    if (fmt == ExportFormat::csv) {
        std::string body = "position,influence\n";
        for (int pos = 0; pos < profile.context_len; ++pos)
            body += std::to_string(pos - profile.context_len) + "," +
                    fmt_double(profile.influence[static_cast<std::size_t>(pos)]) + "\n";
        write_text(path, body);
        return;
    }
    nlohmann::json doc{{"context_len", profile.context_len},
                       {"n", profile.n},
                       {"influence", profile.influence}};
    write_text(path, doc.dump() + "\n");
}

void export_grid(const AttributionGrid& grid, const std::string& path, ExportFormat fmt) {
    if (grid.values.empty()) std::fprintf(stderr, "warning: empty attribution grid: %s\n", path.c_str());
    if (fmt == ExportFormat::csv) {
        std::string body = "feature,position,influence\n";
        for (std::size_t f = 0; f < grid.features.size(); ++f)
            for (int pos = 0; pos < grid.context_len; ++pos)
                body += grid.features[f] + "," + std::to_string(pos - grid.context_len) + "," +
                        fmt_double(grid.values[f * static_cast<std::size_t>(grid.context_len) +
                                               static_cast<std::size_t>(pos)]) +
                        "\n";
        write_text(path, body);
        return;
    }
    nlohmann::json doc{{"features", grid.features},
                       {"context_len", grid.context_len},
                       {"n", grid.n},
                       {"values", grid.values}};
    write_text(path, doc.dump() + "\n");
}

void export_grid_series(const AttributionGrid& grid, const std::string& dir,
                        const std::string& stem) {
    for (std::size_t f = 0; f < grid.features.size(); ++f) {
        std::string body = "position,influence\n";
        for (int pos = 0; pos < grid.context_len; ++pos)
            body += std::to_string(pos - grid.context_len) + "," +
                    fmt_double(grid.values[f * static_cast<std::size_t>(grid.context_len) +
                                           static_cast<std::size_t>(pos)]) +
                    "\n";
        write_text(dir + "/" + stem + "_" + grid.features[f] + ".csv", body);
    }
}

InfluenceProfile load_profile_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json doc;
    in >> doc;
    InfluenceProfile p;
    p.context_len = doc.at("context_len").get<int>();
    p.n = doc.at("n").get<std::int64_t>();
    p.influence = doc.at("influence").get<std::vector<double>>();
    return p;
}

AttributionGrid load_grid_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json doc;
    in >> doc;
    AttributionGrid g;
    g.features = doc.at("features").get<std::vector<std::string>>();
    g.context_len = doc.at("context_len").get<int>();
    g.n = doc.at("n").get<std::int64_t>();
    g.values = doc.at("values").get<std::vector<double>>();
    return g;
}

}  // namespace chordlab
