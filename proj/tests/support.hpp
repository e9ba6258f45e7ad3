#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "edformer/engine/ops.hpp"
#include "edformer/engine/tape.hpp"
#include "edformer/engine/tensor.hpp"

namespace test_support {

using edformer::engine::Shape;
using edformer::engine::Tape;
using edformer::engine::Tensor;
using edformer::engine::Var;

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(shape);
    for (double& v : t.data()) v = u(rng);
    return t;
}

struct GradCheck {
    double max_rel = 0.0;
    double max_abs = 0.0;
};

// Scalar loss built from leaves on a fresh tape.
using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double evaluate_loss(const std::vector<Tensor>& inputs, const LossFn& fn) {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, false));
    return fn(tape, leaves).value()[0];
}

// Compares tape gradients with central differences. The relative error uses
// max(|analytic|, |numeric|, floor) as denominator.
inline GradCheck check_gradients(std::vector<Tensor> inputs, const LossFn& fn, double h = 1e-5,
                                 double floor = 1e-6) {
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<Var> leaves;
        for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
        Var loss = fn(tape, leaves);
        tape.backward(loss);
        for (const auto& v : leaves) analytic.push_back(*tape.grad(v));
    }
    GradCheck out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            const double saved = inputs[i][j];
            inputs[i][j] = saved + h;
            const double up = evaluate_loss(inputs, fn);
            inputs[i][j] = saved - h;
            const double down = evaluate_loss(inputs, fn);
            inputs[i][j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[i][j];
            const double abs_err = std::abs(a - numeric);
            out.max_abs = std::max(out.max_abs, abs_err);
            out.max_rel = std::max(out.max_rel, abs_err / std::max({std::abs(a), std::abs(numeric), floor}));
        }
    }
    return out;
}

// Weighted sum with fixed pseudo-random weights so every output element
// contributes a distinct gradient.
inline Var weighted_sum(Tape& tape, Var y, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    return edformer::engine::sum(edformer::engine::mul(y, tape.constant(random_tensor(y.shape(), rng))));
}

}  // namespace test_support
