#include "edformer/decomposition.hpp"

#include <string>

#include "edformer/error.hpp"

namespace edformer::decomposition {

void validate_kernel(std::size_t kernel) {
    if (kernel == 0 || kernel % 2 == 0) {
        throw ConfigError("decomposition kernel must be an odd positive integer, got " + std::to_string(kernel));
    }
}

std::vector<double> replicate_pad(std::span<const double> series, std::size_t left, std::size_t right) {
    if (series.empty()) throw ShapeError("replicate_pad: empty series");
    std::vector<double> out;
    out.reserve(series.size() + left + right);
    out.insert(out.end(), left, series.front());
    out.insert(out.end(), series.begin(), series.end());
    out.insert(out.end(), right, series.back());
    return out;
}

DecomposedVars series_decompose(Var x, std::size_t kernel) {
    validate_kernel(kernel);
    if (x.rank() != 3) throw ShapeError("series_decompose expects [B, L, N], got " + engine::shape_string(x.shape()));
    Var trend = engine::moving_average(x, 1, kernel);
    return {engine::sub(x, trend), trend};
}

DecomposedSeries series_decompose(const Tensor& x, std::size_t kernel) {
    engine::Tape tape;
    const auto parts = series_decompose(tape.constant(x), kernel);
    return {parts.seasonal.value(), parts.trend.value(), kernel};
}

}  // namespace edformer::decomposition
