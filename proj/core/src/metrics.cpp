#include "chordlab/metrics.hpp"

#include <cmath>

#include "chordlab/errors.hpp"

namespace chordlab {

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

double accuracy(std::span<const std::int32_t> predictions,
                std::span<const std::int32_t> targets) {
    if (predictions.size() != targets.size())
        throw LengthMismatch("accuracy: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(targets.size()) + " targets");
    if (predictions.empty()) throw EmptyInput("accuracy of empty input");
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == targets[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double perplexity(std::span<const double> true_probs, std::int64_t* clamped) {
    if (true_probs.empty()) throw EmptyInput("perplexity of empty input");
    std::vector<double> logs(true_probs.size());
    std::int64_t floored = 0;
    for (std::size_t i = 0; i < true_probs.size(); ++i) {
        double p = true_probs[i];
        if (p < kProbFloor) {
            p = kProbFloor;
            ++floored;
        }
        logs[i] = std::log(p);
    }
    if (clamped) *clamped = floored;
    const double mean = pairwise_sum(logs) / static_cast<double>(logs.size());
    return std::exp(-mean);
}

MetricReport evaluate(const PredictorModel& model, const WindowSlice& data,
                      const ChordEmbeddings& embeddings, int batch_size) {
    if (data.size() == 0) throw EmptyInput("evaluation slice is empty");
    const int v = model.target_vocab_size();

    std::vector<double> p_true(static_cast<std::size_t>(data.size()));
    std::vector<double> sims(static_cast<std::size_t>(data.size()));
    std::int64_t correct = 0;

    for (std::int64_t start = 0; start < data.size(); start += batch_size) {
        const std::int64_t count = std::min<std::int64_t>(batch_size, data.size() - start);
        TokenBatch batch = data.gather(start, count);
        if (model.num_features() == 1 && batch.feats > 1)
            batch = extract_feature(batch, data.set->target_feature);
        const HostTensor<float> probs = model.predict(batch);
        const auto targets = data.gather_targets(start, count);
        for (std::int64_t i = 0; i < count; ++i) {
            const std::span<const float> row(probs.data.data() + i * v,
                                             static_cast<std::size_t>(v));
            const std::int32_t target = targets[static_cast<std::size_t>(i)];
            const std::int32_t pred = argmax_lowest(row);
            if (pred == target) ++correct;
            p_true[static_cast<std::size_t>(start + i)] =
                static_cast<double>(row[static_cast<std::size_t>(target)]);
            sims[static_cast<std::size_t>(start + i)] = embeddings.similarity(pred, target);
        }
    }

    MetricReport report;
    report.n = data.size();
    report.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    report.perplexity = perplexity(p_true, &report.clamped);
    report.similarity = pairwise_sum(sims) / static_cast<double>(data.size());
    return report;
}

}  // namespace chordlab
