#include "chordlab/checkpoint.hpp"

#include <fstream>

#include "chordlab/errors.hpp"
#include "chordlab/neural.hpp"
#include "chordlab/ngram.hpp"
#include "json_util.hpp"

namespace chordlab {
namespace {

constexpr int kFormatVersion = 1;

using nlohmann::json;

void write_file(const json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << doc.dump();
    out << '\n';
    if (!out) throw IoError("checkpoint write failed: " + path);
}

json read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("bad checkpoint JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CorruptCheckpoint("checkpoint root is not an object");
    return doc;
}

json statistical_header(const char* type, double alpha, int max_order,
                        const std::string& feature, const Vocabulary& vocab) {
    return json{
        {"format_version", kFormatVersion}, {"type", type},       {"alpha", alpha},
        {"max_order", max_order},           {"feature", feature}, {"vocab", vocab.tokens()},
    };
}

Vocabulary vocab_from_json(const json& j) {
    const auto tokens = j.get<std::vector<std::string>>();
    return Vocabulary(std::span<const std::string>(tokens));
}

void check_version(const json& doc) {
    const int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw VersionMismatch("checkpoint format_version " + std::to_string(version) +
                              " unsupported (want " + std::to_string(kFormatVersion) + ")");
}

std::unique_ptr<PredictorModel> load_statistical(const json& doc) {
    const std::string type = doc.at("type").get<std::string>();
    const double alpha = doc.at("alpha").get<double>();
    const int max_order = doc.at("max_order").get<int>();
    const std::string feature = doc.at("feature").get<std::string>();
    Vocabulary vocab = vocab_from_json(doc.at("vocab"));

    if (type == "markov") {
        auto model = std::make_unique<MarkovModel>(std::move(vocab), feature, alpha);
        for (const auto& triple : doc.at("counts")) {
            const auto ctx = triple.at(0).get<std::vector<std::int32_t>>();
            if (ctx.size() != 1) throw CorruptCheckpoint("markov context must be one token");
            model->set_count(ctx[0], triple.at(1).get<std::int32_t>(),
                             triple.at(2).get<std::uint32_t>());
        }
        return model;
    }
    if (type == "vom") {
        auto model = std::make_unique<VomModel>(std::move(vocab), feature, alpha, max_order);
        for (const auto& triple : doc.at("counts"))
            model->add_count(triple.at(0).get<std::vector<std::int32_t>>(),
                             triple.at(1).get<std::int32_t>(),
                             triple.at(2).get<std::uint32_t>());
        return model;
    }
    throw CorruptCheckpoint("unknown statistical type: " + type);
}

std::unique_ptr<NeuralModel> load_neural(const json& doc) {
    const std::string kind_name = doc.at("kind").get<std::string>();
    const auto kind = model_kind_from_string(kind_name);
    if (!kind || is_statistical(*kind))
        throw CorruptCheckpoint("unknown neural kind: " + kind_name);
    const Hyperparams hp = hyperparams_from_json(doc.at("hyperparams"));
    const auto features = doc.at("features").get<std::vector<std::string>>();
    const std::string target = doc.at("target_feature").get<std::string>();

    std::vector<Vocabulary> vocabs;
    int target_index = -1;
    for (std::size_t f = 0; f < features.size(); ++f) {
        vocabs.push_back(vocab_from_json(doc.at("vocabs").at(features[f])));
        if (features[f] == target) target_index = static_cast<int>(f);
    }
    if (target_index < 0) throw CorruptCheckpoint("target feature missing from features");

    std::vector<NamedTensor> params;
    for (const auto& p : doc.at("params")) {
        NamedTensor t;
        t.name = p.at("name").get<std::string>();
        Shape shape = p.at("shape").get<Shape>();
        auto data = p.at("data").get<std::vector<double>>();
        std::vector<float> fdata(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) fdata[i] = static_cast<float>(data[i]);
        t.tensor = HostTensor<float>(std::move(shape), std::move(fdata));
        params.push_back(std::move(t));
    }
    try {
        return std::make_unique<NeuralModel>(*kind, hp, features, std::move(vocabs), target_index,
                                             std::move(params));
    } catch (const CorruptCheckpoint&) {
        throw;
    } catch (const Error& e) {
        throw CorruptCheckpoint(e.what());
    }
}

}  // namespace

void save_checkpoint(const MarkovModel& model, const std::string& path) {
    json doc = statistical_header("markov", model.alpha(), 1, model.feature_names()[0],
                                  model.vocab(0));
    json counts = json::array();
    const int v = model.vocab(0).size();
    for (int i = 0; i < v; ++i)
        for (int j = 0; j < v; ++j) {
            const std::uint32_t n =
                model.counts()[static_cast<std::size_t>(i) * v + static_cast<std::size_t>(j)];
            if (n) counts.push_back(json::array({json::array({i}), j, n}));
        }
    doc["counts"] = std::move(counts);
    write_file(doc, path);
}

void save_checkpoint(const VomModel& model, const std::string& path) {
    json doc = statistical_header("vom", model.alpha(), model.max_order(),
                                  model.feature_names()[0], model.vocab(0));
    json counts = json::array();
    for (const auto& [key, entry] : model.counts())
        for (const auto& [succ, n] : entry.succ)
            counts.push_back(json::array({key, succ, n}));
    doc["counts"] = std::move(counts);
    write_file(doc, path);
}

void save_checkpoint(const NeuralModel& model, const std::string& path) {
    json doc{
        {"format_version", kFormatVersion},
        {"kind", to_string(model.kind())},
        {"hyperparams", hyperparams_to_json(model.hyperparams())},
        {"features", model.feature_names()},
        {"target_feature", model.feature_names()[static_cast<std::size_t>(model.target_feature())]},
    };
    json vocabs = json::object();
    for (std::size_t f = 0; f < model.feature_names().size(); ++f)
        vocabs[model.feature_names()[f]] = model.vocab(static_cast<int>(f)).tokens();
    doc["vocabs"] = std::move(vocabs);

    json params = json::array();
    for (const NamedTensor& p : model.params()) {
        // store as doubles: every float32 value round-trips exactly
        std::vector<double> data(p.tensor.data.begin(), p.tensor.data.end());
        params.push_back(json{{"name", p.name}, {"shape", p.tensor.shape}, {"data", data}});
    }
    doc["params"] = std::move(params);
    write_file(doc, path);
}

std::unique_ptr<PredictorModel> load_model(const std::string& path) {
    const json doc = read_file(path);
    check_version(doc);
    try {
        if (doc.contains("type")) return load_statistical(doc);
        if (doc.contains("kind")) return load_neural(doc);
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("bad checkpoint field: ") + e.what());
    }
    throw CorruptCheckpoint("checkpoint has neither 'type' nor 'kind'");
}

std::unique_ptr<NeuralModel> load_neural_model(const std::string& path) {
    const json doc = read_file(path);
    check_version(doc);
    if (doc.contains("type"))
        throw VersionMismatch("statistical checkpoint cannot be loaded as a neural model");
    if (!doc.contains("kind")) throw CorruptCheckpoint("checkpoint has no 'kind'");
    try {
        return load_neural(doc);
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("bad checkpoint field: ") + e.what());
    }
}

}  // namespace chordlab
