#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edformer/data.hpp"
#include "edformer/model.hpp"

namespace edformer::train {

using data::WindowPair;
using engine::Tensor;
using model::Model;

struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 1e-4;
    std::size_t max_epochs = 10;
    // Epochs without validation improvement before stopping.
    std::size_t patience = 3;
    // Optimizer steps after which training stops; 0 means no cap.
    std::size_t max_steps = 0;
    std::uint64_t seed = 0;
    bool shuffle = true;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean MSE over the epoch's training batches
    std::optional<double> val_loss;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t steps = 0;
    std::optional<std::size_t> best_epoch;
};

// Mini-batch Adam on mean squared error. With validation windows, training
// stops after `patience` epochs without improvement and the parameters of
// the best validation epoch are restored.
TrainResult train(Model& model, std::span<const WindowPair> train_windows, std::span<const WindowPair> val_windows,
                  const TrainConfig& config);

// Eval-mode forecasts for all windows, [W, H, N].
Tensor predict(const Model& model, std::span<const WindowPair> windows, std::size_t batch_size = 256);

struct Evaluation {
    double mse = 0.0;
    double mae = 0.0;
};

// Averages over every window, horizon step and variate.
Evaluation evaluate(const Model& model, std::span<const WindowPair> windows, std::size_t batch_size = 256);

// Mean squared error of one batch, recorded on `tape`; exposed for gradient checks.
engine::Var batch_loss(const Model& model, engine::Tape& tape, std::span<const engine::Var> params,
                       const Tensor& inputs, const Tensor& targets, const model::ForwardOptions& options = {});

struct SpeedReport {
    double seconds_per_iteration = 0.0;
    double total_seconds = 0.0;
    std::size_t iterations = 0;
};

// Times `iterations` forward+backward passes on batches drawn cyclically from `windows`.
SpeedReport benchmark_speed(const Model& model, std::span<const WindowPair> windows, std::size_t iterations,
                            std::size_t batch_size = 32);

}  // namespace edformer::train
