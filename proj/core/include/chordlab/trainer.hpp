#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "chordlab/neural.hpp"
#include "chordlab/window.hpp"

namespace chordlab {

struct TrainConfig {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch = 32;
    int max_epochs = 60;
    int patience = 5;
    std::uint64_t seed = 42;
    double clip_norm = 1.0;      // global gradient norm; <= 0 disables
    double stop_accuracy = 0.0;  // > 0: stop once validation accuracy reaches it
};

// Adam with bias correction.
template <typename T>
class Adam {
public:
    Adam(double lr, double beta1, double beta2, double eps)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads);

    std::int64_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

// Stops after `patience` consecutive epochs without a strict improvement.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    // Returns true when training should stop.
    bool update(double val_loss) {
        ++epoch_;
        if (val_loss < best_) {
            best_ = val_loss;
            best_epoch_ = epoch_;
            bad_ = 0;
            improved_ = true;
        } else {
            ++bad_;
            improved_ = false;
        }
        return bad_ >= patience_;
    }

    bool improved() const { return improved_; }
    double best() const { return best_; }
    int best_epoch() const { return best_epoch_; }

private:
    int patience_;
    int epoch_ = -1;
    int best_epoch_ = -1;
    int bad_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
    bool improved_ = false;
};

struct TrainLog {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;
    int epochs = 0;
    bool stopped_early = false;
};

// Minimizes cross-entropy with Adam; keeps the best-validation parameter
// snapshot and restores it on return. Throws DivergedLoss on NaN/Inf loss.
TrainLog train_model(NeuralModel& model, const WindowSlice& train, const WindowSlice& val,
                     const TrainConfig& cfg);

// Mean objective loss over a slice, dropout disabled.
double validation_loss(const NeuralModel& model, const WindowSlice& data, int batch_size);

// Greedy top-1 accuracy of any predictor over a slice.
double prediction_accuracy(const PredictorModel& model, const WindowSlice& data, int batch_size);

}  // namespace chordlab
