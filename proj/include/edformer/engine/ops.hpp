#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "edformer/engine/tape.hpp"

// Differentiable operations on tape values. Elementwise binary ops follow
// NumPy broadcasting; everything else is deliberately narrow: exactly what
// the forecaster needs.
namespace edformer::engine {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }

Var scale(Var x, double factor);
Var square(Var x);
// Subgradient at zero is zero.
Var relu(Var x);
// max(sqrt(x), floor); gradient is zero wherever the floor is active.
Var sqrt_floor(Var x, double floor);

// [..., p, q] x [..., q, r] -> [..., p, r]; leading dimensions broadcast from 1.
Var matmul(Var a, Var b);

// Numerically stable softmax along `axis` (negative counts from the end).
Var softmax(Var x, int axis);

// (h - mean) / sqrt(var + eps) over the last axis, population variance.
Var layer_norm(Var x, double eps);

Var permute(Var x, const std::vector<std::size_t>& axes);
Var transpose(Var x, std::size_t axis_a, std::size_t axis_b);
Var reshape(Var x, Shape shape);
Var flip(Var x, std::size_t axis);

Var sum(Var x);
Var mean(Var x);
Var mean_axis(Var x, std::size_t axis, bool keepdim = true);

// Centered moving average of odd width `kernel` along `axis`, replicating
// edge values so the output keeps the input length.
Var moving_average(Var x, std::size_t axis, std::size_t kernel);

// Inverted dropout: zeroes entries with probability p and scales survivors by 1/(1-p).
Var dropout(Var x, double p, std::mt19937_64& rng);

Shape broadcast_shapes(const Shape& a, const Shape& b);

}  // namespace edformer::engine
