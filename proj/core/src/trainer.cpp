#include "chordlab/trainer.hpp"

#include <cmath>

#include "chordlab/errors.hpp"

namespace chordlab {

template <typename T>
void Adam<T>::step(std::span<const std::span<T>> params,
                   std::span<const std::span<const T>> grads) {
    if (params.size() != grads.size()) throw ShapeMismatch("adam: params/grads count mismatch");
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].size(), T(0));
            v_[i].assign(params[i].size(), T(0));
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || params[i].size() != m_[i].size())
            throw ShapeMismatch("adam: tensor size changed between steps");
        T* p = params[i].data();
        const T* g = grads[i].data();
        T* m = m_[i].data();
        T* v = v_[i].data();
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            m[j] = static_cast<T>(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
            v[j] = static_cast<T>(beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j]);
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

template class Adam<float>;
template class Adam<double>;

namespace {

TokenBatch model_batch(const NeuralModel& model, const WindowSlice& data, std::int64_t first,
                       std::int64_t count) {
    TokenBatch b = data.gather(first, count);
    if (model.num_features() == 1 && b.feats > 1)
        b = extract_feature(b, data.set->target_feature);
    return b;
}

double batch_loss(const NeuralModel& model, const TokenBatch& batch,
                  std::span<const std::int32_t> targets) {
    Graph<float> g;
    std::vector<int> leaves;
    for (const auto& p : model.params())
        leaves.push_back(g.leaf(p.tensor.shape, std::span<const float>(p.tensor.data), false));
    BuildOptions opts;
    const int loss = model.build_loss(g, leaves, batch, targets, opts);
    return static_cast<double>(g.value(loss)[0]);
}

}  // namespace

double validation_loss(const NeuralModel& model, const WindowSlice& data, int batch_size) {
    if (data.size() == 0) throw EmptyInput("validation slice is empty");
    double weighted = 0;
    for (std::int64_t start = 0; start < data.size(); start += batch_size) {
        const std::int64_t count = std::min<std::int64_t>(batch_size, data.size() - start);
        const TokenBatch b = model_batch(model, data, start, count);
        const auto targets = data.gather_targets(start, count);
        weighted += batch_loss(model, b, targets) * static_cast<double>(count);
    }
    return weighted / static_cast<double>(data.size());
}

double prediction_accuracy(const PredictorModel& model, const WindowSlice& data, int batch_size) {
    if (data.size() == 0) throw EmptyInput("slice is empty");
    std::int64_t correct = 0;
    const int v = model.target_vocab_size();
    for (std::int64_t start = 0; start < data.size(); start += batch_size) {
        const std::int64_t count = std::min<std::int64_t>(batch_size, data.size() - start);
        TokenBatch b = data.gather(start, count);
        if (model.num_features() == 1 && b.feats > 1)
            b = extract_feature(b, data.set->target_feature);
        const HostTensor<float> probs = model.predict(b);
        const auto targets = data.gather_targets(start, count);
        for (std::int64_t i = 0; i < count; ++i) {
            const std::span<const float> row(probs.data.data() + i * v, static_cast<std::size_t>(v));
            if (argmax_lowest(row) == targets[static_cast<std::size_t>(i)]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainLog train_model(NeuralModel& model, const WindowSlice& train, const WindowSlice& val,
                     const TrainConfig& cfg) {
    if (train.size() == 0) throw EmptyCorpus("no training windows");
    if (val.size() == 0) throw EmptyCorpus("no validation windows");
    if (cfg.batch < 1 || cfg.patience < 1 || cfg.lr <= 0)
        throw Error("invalid train config (batch >= 1, patience >= 1, lr > 0)");

    Adam<float> opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    Rng shuffle_rng = Rng(cfg.seed).split("shuffle");
    Rng dropout_rng = Rng(cfg.seed).split("dropout");
    EarlyStopper stopper(cfg.patience);
    TrainLog log;

    std::vector<NamedTensor> best_params = model.params();
    WindowSlice epoch_slice{train.set, train.idx};

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(epoch_slice.idx);
        double loss_sum = 0;
        std::int64_t batches = 0;

        for (std::int64_t start = 0; start < epoch_slice.size(); start += cfg.batch) {
            const std::int64_t count = std::min<std::int64_t>(cfg.batch, epoch_slice.size() - start);
            const TokenBatch batch = model_batch(model, epoch_slice, start, count);
            const auto targets = epoch_slice.gather_targets(start, count);

            Graph<float> g;
            std::vector<int> leaves;
            for (const auto& p : model.params())
                leaves.push_back(g.leaf(p.tensor.shape, std::span<const float>(p.tensor.data), true));
            BuildOptions opts;
            opts.training = true;
            opts.dropout_rng = &dropout_rng;
            const int loss_id = model.build_loss(g, leaves, batch, targets, opts);
            const double loss = static_cast<double>(g.value(loss_id)[0]);
            if (!std::isfinite(loss))
                throw DivergedLoss("loss diverged at epoch " + std::to_string(epoch));
            loss_sum += loss;
            ++batches;
            g.backward(loss_id);

            // global-norm clip, then update
            std::vector<std::span<float>> params;
            std::vector<std::span<const float>> grads;
            params.reserve(leaves.size());
            grads.reserve(leaves.size());
            double sq_norm = 0;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                std::vector<float>& grad = g.grad(leaves[i]);
                for (float x : grad) sq_norm += static_cast<double>(x) * x;
                params.emplace_back(model.params()[i].tensor.data);
                grads.emplace_back(grad);
            }
            if (cfg.clip_norm > 0) {
                const double norm = std::sqrt(sq_norm);
                if (norm > cfg.clip_norm) {
                    const float scale = static_cast<float>(cfg.clip_norm / norm);
                    for (std::size_t i = 0; i < leaves.size(); ++i)
                        for (float& x : g.grad(leaves[i])) x *= scale;
                }
            }
            opt.step(params, grads);
        }

        log.train_loss.push_back(loss_sum / static_cast<double>(batches));
        const double vloss = validation_loss(model, val, cfg.batch);
        log.val_loss.push_back(vloss);
        log.epochs = epoch + 1;
        if (!std::isfinite(vloss))
            throw DivergedLoss("validation loss diverged at epoch " + std::to_string(epoch));

        const bool stop = stopper.update(vloss);
        if (stopper.improved()) best_params = model.params();
        if (cfg.stop_accuracy > 0 &&
            prediction_accuracy(model, val, cfg.batch) >= cfg.stop_accuracy) {
            // keep the current weights: they hit the accuracy target
            log.best_epoch = epoch;
            log.stopped_early = true;
            return log;
        }
        if (stop) {
            log.stopped_early = true;
            break;
        }
    }

    log.best_epoch = stopper.best_epoch();
    model.params() = std::move(best_params);
    return log;
}

}  // namespace chordlab
