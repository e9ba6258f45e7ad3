#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edformer/engine/ops.hpp"
#include "edformer/engine/tensor.hpp"

// Additive seasonal/trend split: the trend is a centered moving average over
// an edge-replicated series and the seasonal part is the residual.
namespace edformer::decomposition {

using engine::Tensor;
using engine::Var;

inline constexpr std::size_t kDefaultKernel = 25;

// Prepends x[0] `left` times and appends x[L-1] `right` times.
std::vector<double> replicate_pad(std::span<const double> series, std::size_t left, std::size_t right);

struct DecomposedSeries {
    Tensor seasonal;  // [B, L, N]
    Tensor trend;     // [B, L, N]
    std::size_t kernel = kDefaultKernel;
};

// Decomposes every (batch, variate) series of x [B, L, N] along time.
DecomposedSeries series_decompose(const Tensor& x, std::size_t kernel = kDefaultKernel);

struct DecomposedVars {
    Var seasonal;
    Var trend;
};

// Same split recorded on the tape, so gradients reach the raw input.
DecomposedVars series_decompose(Var x, std::size_t kernel = kDefaultKernel);

void validate_kernel(std::size_t kernel);

}  // namespace edformer::decomposition
