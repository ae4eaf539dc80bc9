#include "chordlab/word2vec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chordlab/errors.hpp"
#include "chordlab/rng.hpp"
#include "chordlab/vocab.hpp"
#include <json.hpp>

namespace chordlab {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double ChordEmbeddings::similarity(std::int32_t a, std::int32_t b) const {
    const std::int32_t v = vocab_size();
    if (a < 0 || a >= v) a = Vocabulary::kUnk;
    if (b < 0 || b >= v) b = Vocabulary::kUnk;
    const float* va = vectors.data.data() + static_cast<std::int64_t>(a) * dim;
    const float* vb = vectors.data.data() + static_cast<std::int64_t>(b) * dim;
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < dim; ++i) {
        dot += static_cast<double>(va[i]) * vb[i];
        na += static_cast<double>(va[i]) * va[i];
        nb += static_cast<double>(vb[i]) * vb[i];
    }
    if (na == 0 || nb == 0) return 0;
    const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
    return cos > 0 ? (cos > 1 ? 1.0 : cos) : 0.0;
}

ChordEmbeddings train_embeddings(const std::vector<std::vector<std::int32_t>>& sequences,
                                 std::int32_t vocab_size, const Word2VecConfig& cfg,
                                 std::uint64_t seed) {
    if (sequences.empty()) throw EmptyCorpus("no sequences for embedding training");
    if (vocab_size < 1) throw Error("vocab size must be positive");
    const int d = cfg.dim;

    Rng rng = Rng(seed).split("w2v");
    ChordEmbeddings emb;
    emb.dim = d;
    emb.vectors = HostTensor<float>::zeros({vocab_size, d});
    for (float& x : emb.vectors.data)
        x = static_cast<float>((rng.next_double() - 0.5) / d);
    std::vector<float> output(static_cast<std::size_t>(vocab_size) * d, 0.0f);

    // unigram^0.75 noise distribution (cumulative weights for sampling)
    std::vector<double> cum(static_cast<std::size_t>(vocab_size), 0.0);
    {
        std::vector<std::int64_t> freq(static_cast<std::size_t>(vocab_size), 0);
        for (const auto& seq : sequences)
            for (std::int32_t t : seq) ++freq[static_cast<std::size_t>(t)];
        double total = 0;
        for (std::int32_t i = 0; i < vocab_size; ++i) {
            total += std::pow(static_cast<double>(freq[static_cast<std::size_t>(i)]), 0.75);
            cum[static_cast<std::size_t>(i)] = total;
        }
        if (total == 0) throw EmptyCorpus("embedding corpus has no tokens");
    }
    auto sample_noise = [&]() -> std::int32_t {
        const double u = rng.next_double() * cum.back();
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        return static_cast<std::int32_t>(std::distance(cum.begin(), it) == vocab_size
                                             ? vocab_size - 1
                                             : std::distance(cum.begin(), it));
    };

    std::vector<float> accum(static_cast<std::size_t>(d));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& seq : sequences) {
            const auto len = static_cast<std::int64_t>(seq.size());
            for (std::int64_t t = 0; t < len; ++t) {
                const std::int32_t center = seq[static_cast<std::size_t>(t)];
                float* vc = emb.vectors.data.data() + static_cast<std::int64_t>(center) * d;
                for (int off = -cfg.window; off <= cfg.window; ++off) {
                    if (off == 0 || t + off < 0 || t + off >= len) continue;
                    const std::int32_t ctx = seq[static_cast<std::size_t>(t + off)];
                    std::fill(accum.begin(), accum.end(), 0.0f);
                    for (int n = 0; n <= cfg.negatives; ++n) {
                        std::int32_t target;
                        double label;
                        if (n == 0) {
                            target = ctx;
                            label = 1.0;
                        } else {
                            target = sample_noise();
                            if (target == ctx) continue;
                            label = 0.0;
                        }
                        float* u = output.data() + static_cast<std::int64_t>(target) * d;
                        double dot = 0;
                        for (int i = 0; i < d; ++i) dot += static_cast<double>(vc[i]) * u[i];
                        const float gupd = static_cast<float>(cfg.lr * (label - sigmoid(dot)));
                        for (int i = 0; i < d; ++i) {
                            accum[static_cast<std::size_t>(i)] += gupd * u[i];
                            u[i] += gupd * vc[i];
                        }
                    }
                    for (int i = 0; i < d; ++i) vc[i] += accum[static_cast<std::size_t>(i)];
                }
            }
        }
    }
    return emb;
}

void save_embeddings(const ChordEmbeddings& emb, const std::string& path) {
    std::vector<double> data(emb.vectors.data.begin(), emb.vectors.data.end());
    const nlohmann::json doc{
        {"format_version", 1},
        {"kind", "w2v"},
        {"dim", emb.dim},
        {"shape", emb.vectors.shape},
        {"data", data},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embeddings: " + path);
    out << doc.dump() << '\n';
    if (!out) throw IoError("embeddings write failed: " + path);
}

ChordEmbeddings load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embeddings: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
        if (doc.at("kind").get<std::string>() != "w2v")
            throw VersionMismatch("not a w2v checkpoint");
        ChordEmbeddings emb;
        emb.dim = doc.at("dim").get<int>();
        Shape shape = doc.at("shape").get<Shape>();
        const auto data = doc.at("data").get<std::vector<double>>();
        std::vector<float> fdata(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) fdata[i] = static_cast<float>(data[i]);
        emb.vectors = HostTensor<float>(std::move(shape), std::move(fdata));
        return emb;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("bad embeddings JSON: ") + e.what());
    }
}

}  // namespace chordlab
