#include "chordlab/ngram.hpp"

#include <algorithm>

#include "chordlab/checkpoint.hpp"
#include "chordlab/errors.hpp"

namespace chordlab {
namespace {

std::vector<std::int32_t> strip_pad(std::span<const std::int32_t> context) {
    std::vector<std::int32_t> out;
    out.reserve(context.size());
    for (std::int32_t t : context)
        if (t != Vocabulary::kPad) out.push_back(t);
    return out;
}

void check_songs(const std::vector<std::vector<std::int32_t>>& songs) {
    if (songs.empty()) throw EmptyCorpus("no songs to fit on");
    std::int64_t transitions = 0;
    for (const auto& s : songs)
        if (s.size() >= 2) transitions += static_cast<std::int64_t>(s.size()) - 1;
    if (transitions == 0) throw EmptyCorpus("corpus has no transitions");
}

HostTensor<float> predict_rows(const TokenBatch& batch, int vocab,
                               const std::function<std::vector<double>(std::span<const std::int32_t>)>& dist) {
    if (batch.feats != 1)
        throw ShapeMismatch("statistical models take single-feature contexts, got feats=" +
                            std::to_string(batch.feats));
    HostTensor<float> out = HostTensor<float>::zeros({batch.batch, vocab});
    for (int b = 0; b < batch.batch; ++b) {
        std::span<const std::int32_t> ctx(batch.tokens.data() +
                                              static_cast<std::size_t>(b) * batch.len,
                                          static_cast<std::size_t>(batch.len));
        const std::vector<double> row = dist(ctx);
        for (int j = 0; j < vocab; ++j)
            out.data[static_cast<std::size_t>(b) * vocab + j] = static_cast<float>(row[static_cast<std::size_t>(j)]);
    }
    return out;
}

}  // namespace

// ---- first order ----

MarkovModel::MarkovModel(Vocabulary vocab, std::string feature_name, double alpha)
    : vocab_(std::move(vocab)), features_{std::move(feature_name)}, alpha_(alpha) {
    if (alpha_ < 0) throw Error("alpha must be >= 0");
    const auto v = static_cast<std::size_t>(vocab_.size());
    counts_.assign(v * v, 0);
    row_totals_.assign(v, 0);
}

void MarkovModel::fit(const std::vector<std::vector<std::int32_t>>& songs) {
    check_songs(songs);
    const auto v = static_cast<std::size_t>(vocab_.size());
    for (const auto& song : songs)
        for (std::size_t t = 0; t + 1 < song.size(); ++t) {
            const auto i = static_cast<std::size_t>(song[t]);
            const auto j = static_cast<std::size_t>(song[t + 1]);
            ++counts_[i * v + j];
            ++row_totals_[i];
        }
}

void MarkovModel::set_count(std::int32_t from, std::int32_t to, std::uint32_t n) {
    const auto v = static_cast<std::size_t>(vocab_.size());
    const auto i = static_cast<std::size_t>(from);
    const auto j = static_cast<std::size_t>(to);
    if (from < 0 || to < 0 || i >= v || j >= v) throw IndexOutOfRange("count index out of range");
    row_totals_[i] += n - counts_[i * v + j];
    counts_[i * v + j] = n;
}

std::vector<double> MarkovModel::distribution(std::span<const std::int32_t> context) const {
    const int v = vocab_.size();
    std::vector<double> row(static_cast<std::size_t>(v));
    const std::vector<std::int32_t> ctx = strip_pad(context);
    const double uniform = 1.0 / v;
    if (ctx.empty()) {
        std::fill(row.begin(), row.end(), uniform);
        return row;
    }
    const auto i = static_cast<std::size_t>(ctx.back());
    if (ctx.back() < 0 || static_cast<int>(i) >= v)
        throw IndexOutOfRange("context token out of vocabulary");
    const double total = static_cast<double>(row_totals_[i]);
    if (total == 0 && alpha_ == 0) {
        std::fill(row.begin(), row.end(), uniform);
        return row;
    }
    const double denom = total + alpha_ * v;
    for (int j = 0; j < v; ++j)
        row[static_cast<std::size_t>(j)] =
            (static_cast<double>(counts_[i * static_cast<std::size_t>(v) + static_cast<std::size_t>(j)]) + alpha_) / denom;
    return row;
}

HostTensor<float> MarkovModel::predict(const TokenBatch& contexts) const {
    return predict_rows(contexts, vocab_.size(),
                        [this](std::span<const std::int32_t> c) { return distribution(c); });
}

void MarkovModel::save(const std::string& path) const { save_checkpoint(*this, path); }

// ---- variable order ----

VomModel::VomModel(Vocabulary vocab, std::string feature_name, double alpha, int max_order)
    : vocab_(std::move(vocab)),
      features_{std::move(feature_name)},
      alpha_(alpha),
      max_order_(max_order) {
    if (alpha_ < 0) throw Error("alpha must be >= 0");
    if (max_order_ < 1) throw Error("max order must be >= 1");
}

void VomModel::fit(const std::vector<std::vector<std::int32_t>>& songs) {
    check_songs(songs);
    for (const auto& song : songs) {
        const auto len = static_cast<std::int64_t>(song.size());
        for (std::int64_t t = 0; t + 1 < len; ++t) {
            const std::int32_t successor = song[static_cast<std::size_t>(t + 1)];
            for (int n = 1; n <= max_order_ && t - n + 1 >= 0; ++n) {
                std::vector<std::int32_t> key(song.begin() + (t - n + 1), song.begin() + t + 1);
                auto& entry = counts_[std::move(key)];
                ++entry.succ[successor];
                ++entry.total;
            }
        }
    }
}

void VomModel::add_count(std::vector<std::int32_t> key, std::int32_t successor, std::uint32_t n) {
    auto& entry = counts_[std::move(key)];
    entry.succ[successor] += n;
    entry.total += n;
}

std::vector<double> VomModel::distribution(std::span<const std::int32_t> context) const {
    const int v = vocab_.size();
    std::vector<double> row(static_cast<std::size_t>(v), 1.0 / v);
    const std::vector<std::int32_t> ctx = strip_pad(context);

    const int longest = std::min<std::int64_t>(max_order_, static_cast<std::int64_t>(ctx.size()));
    for (int n = longest; n >= 1; --n) {
        std::vector<std::int32_t> key(ctx.end() - n, ctx.end());
        const auto it = counts_.find(key);
        if (it == counts_.end()) continue;
        const double denom = static_cast<double>(it->second.total) + alpha_ * v;
        for (int j = 0; j < v; ++j) row[static_cast<std::size_t>(j)] = alpha_ / denom;
        for (const auto& [succ, cnt] : it->second.succ)
            row[static_cast<std::size_t>(succ)] = (static_cast<double>(cnt) + alpha_) / denom;
        return row;
    }
    return row;  // nothing stored: uniform
}

HostTensor<float> VomModel::predict(const TokenBatch& contexts) const {
    return predict_rows(contexts, vocab_.size(),
                        [this](std::span<const std::int32_t> c) { return distribution(c); });
}

void VomModel::save(const std::string& path) const { save_checkpoint(*this, path); }

// ---- fitting entry points ----

MarkovModel fit_first_order(const std::vector<std::vector<std::int32_t>>& songs,
                            double alpha, Vocabulary vocab, std::string feature_name) {
    MarkovModel model(std::move(vocab), std::move(feature_name), alpha);
    model.fit(songs);
    return model;
}

VomModel fit_variable_order(const std::vector<std::vector<std::int32_t>>& songs,
                            double alpha, int max_order, Vocabulary vocab,
                            std::string feature_name) {
    VomModel model(std::move(vocab), std::move(feature_name), alpha, max_order);
    model.fit(songs);
    return model;
}

std::int32_t predict_next(const MarkovModel& model, std::span<const std::int32_t> context) {
    const auto row = model.distribution(context);
    return argmax_lowest(std::span<const double>(row));
}

std::int32_t predict_next(const VomModel& model, std::span<const std::int32_t> context) {
    const auto row = model.distribution(context);
    return argmax_lowest(std::span<const double>(row));
}

}  // namespace chordlab
