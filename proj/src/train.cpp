#include "edformer/train.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "edformer/engine/adam.hpp"
#include "edformer/error.hpp"
#include "edformer/metrics.hpp"

namespace edformer::train {

using engine::Tape;
using engine::Var;

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
}

Var batch_loss(const Model& model, Tape& tape, std::span<const Var> params, const Tensor& inputs,
               const Tensor& targets, const model::ForwardOptions& options) {
    Var out = model.forward(tape.constant(inputs), params, options);
    if (out.shape() != targets.shape()) {
        throw ShapeError("targets " + engine::shape_string(targets.shape()) + " do not match forecasts " +
                         engine::shape_string(out.shape()));
    }
    return engine::mean(engine::square(engine::sub(out, tape.constant(targets))));
}

Tensor predict(const Model& model, std::span<const WindowPair> windows, std::size_t batch_size) {
    if (windows.empty()) throw ConfigError("predict needs at least one window");
    const auto& c = model.config();
    std::vector<double> out;
    out.reserve(windows.size() * c.horizon * c.variates);
    for (std::size_t start = 0; start < windows.size(); start += batch_size) {
        const std::size_t stop = std::min(windows.size(), start + batch_size);
        const Tensor pred = model.forecast(data::stack_inputs(windows.subspan(start, stop - start)));
        out.insert(out.end(), pred.data().begin(), pred.data().end());
    }
    return Tensor({windows.size(), c.horizon, c.variates}, std::move(out));
}

Evaluation evaluate(const Model& model, std::span<const WindowPair> windows, std::size_t batch_size) {
    const Tensor pred = predict(model, windows, batch_size);
    const Tensor truth = data::stack_targets(windows);
    return {metrics::mse(pred, truth), metrics::mae(pred, truth)};
}

TrainResult train(Model& model, std::span<const WindowPair> train_windows, std::span<const WindowPair> val_windows,
                  const TrainConfig& config) {
    config.validate();
    if (train_windows.empty()) throw ConfigError("training needs at least one window");

    engine::Adam adam({.learning_rate = config.learning_rate});
    std::mt19937_64 order_rng(config.seed);
    std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    std::optional<double> best_val;
    std::vector<Tensor> best_params;
    std::size_t epochs_without_improvement = 0;
    bool step_cap_reached = false;

    for (std::size_t epoch = 1; epoch <= config.max_epochs && !step_cap_reached; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), order_rng);
        double weighted_loss = 0.0;
        std::size_t seen = 0;
        std::size_t batch_id = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_id) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);

            Tape tape;
            const auto vars = model.bind(tape, true);
            Var loss;
            try {
                loss = batch_loss(model, tape, vars, data::stack_inputs(train_windows, idx),
                                  data::stack_targets(train_windows, idx), {.train = true, .rng = &dropout_rng});
            } catch (const NonFiniteError&) {
                throw DivergenceError(result.steps, batch_id);
            }
            tape.backward(loss);

            std::vector<Tensor> grads;
            grads.reserve(vars.size());
            for (const Var& v : vars) grads.push_back(*tape.grad(v));
            adam.step(model.parameters(), grads);

            weighted_loss += loss.value()[0] * static_cast<double>(idx.size());
            seen += idx.size();
            ++result.steps;
            if (config.max_steps != 0 && result.steps >= config.max_steps) {
                step_cap_reached = true;
                break;
            }
        }

        EpochRecord record{epoch, weighted_loss / static_cast<double>(seen), std::nullopt};
        if (!val_windows.empty()) {
            const double val = evaluate(model, val_windows).mse;
            record.val_loss = val;
            if (!best_val || val < *best_val) {
                best_val = val;
                best_params = model.parameters();
                result.best_epoch = epoch;
                epochs_without_improvement = 0;
            } else {
                ++epochs_without_improvement;
            }
        }
        result.history.push_back(record);
        if (best_val && config.patience != 0 && epochs_without_improvement >= config.patience) break;
    }

    if (best_val) model.parameters() = std::move(best_params);
    return result;
}

SpeedReport benchmark_speed(const Model& model, std::span<const WindowPair> windows, std::size_t iterations,
                            std::size_t batch_size) {
    if (iterations == 0) throw ConfigError("benchmark needs at least one iteration");
    if (windows.empty()) throw ConfigError("benchmark needs at least one window");
    std::mt19937_64 rng(model.config().seed);
    std::vector<std::size_t> idx(batch_size);
    std::size_t cursor = 0;

    SpeedReport report;
    report.iterations = iterations;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (auto& i : idx) i = cursor++ % windows.size();
        const Tensor inputs = data::stack_inputs(windows, idx);
        const Tensor targets = data::stack_targets(windows, idx);

        const auto start = std::chrono::steady_clock::now();
        Tape tape;
        const auto vars = model.bind(tape, true);
        Var loss = batch_loss(model, tape, vars, inputs, targets, {.train = true, .rng = &rng});
        tape.backward(loss);
        const auto stop = std::chrono::steady_clock::now();
        report.total_seconds += std::chrono::duration<double>(stop - start).count();
    }
    report.seconds_per_iteration = report.total_seconds / static_cast<double>(iterations);
    return report;
}

}  // namespace edformer::train
