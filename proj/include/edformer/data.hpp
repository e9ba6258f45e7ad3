#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "edformer/engine/tensor.hpp"

namespace edformer::data {

using engine::Tensor;

struct RawDataset {
    std::vector<std::string> variate_names;
    Tensor values;                        // [T, N]
    std::vector<std::string> timestamps;  // empty when the file has no date column

    std::size_t rows() const { return values.dim(0); }
    std::size_t variates() const { return values.dim(1); }
};

// Comma-separated with a header row. A first column named `date`, or whose
// first data cell is not a number, is kept as timestamps; every other column
// must be numeric.
RawDataset load_csv(const std::filesystem::path& path);
RawDataset parse_csv(std::istream& in, const std::string& source = "<stream>");

// Half-open [begin, end) row range.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SplitRatios {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct Splits {
    IndexRange train;
    IndexRange val;
    IndexRange test;
};

// Contiguous train/val/test ranges from the start of the series. Windows of
// the later splits may look back into the previous split; every split must
// still hold at least lookback + horizon rows.
Splits split_chronological(std::size_t total, const SplitRatios& ratios, std::size_t lookback, std::size_t horizon);
Splits split_by_sizes(std::size_t total, std::size_t train, std::size_t val, std::size_t test, std::size_t lookback,
                      std::size_t horizon);

// Per-variate z-score statistics fit on the training rows.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std;

    // Applies to any tensor whose last axis indexes variates.
    Tensor transform(const Tensor& values) const;
    Tensor inverse(const Tensor& values) const;
};

inline constexpr double kStdFloor = 1e-8;

Standardizer fit_standardizer(const Tensor& values, IndexRange train);

struct Standardized {
    Tensor values;
    Standardizer stats;
};
Standardized standardize(const Tensor& values, IndexRange train);

struct WindowPair {
    Tensor input;   // [L, N] = values[origin - L, origin)
    Tensor target;  // [H, N] = values[origin, origin + H)
    std::size_t origin = 0;
};

// All windows whose targets fall inside `range`, origins ascending. Inputs
// may reach before range.begin but never before row 0.
std::vector<WindowPair> make_windows(const Tensor& values, IndexRange range, std::size_t lookback,
                                     std::size_t horizon, std::size_t stride = 1);

// Stacks selected windows into [B, L, N] inputs and [B, H, N] targets.
Tensor stack_inputs(std::span<const WindowPair> windows, std::span<const std::size_t> order);
Tensor stack_targets(std::span<const WindowPair> windows, std::span<const std::size_t> order);
Tensor stack_inputs(std::span<const WindowPair> windows);
Tensor stack_targets(std::span<const WindowPair> windows);

// Phase-shifted sinusoids on a shared linear trend plus Gaussian noise.
struct ToySeriesOptions {
    std::size_t length = 600;
    std::size_t variates = 3;
    double period = 24.0;
    double amplitude = 1.0;
    double slope = 0.004;
    double noise_std = 0.05;
    std::uint64_t seed = 0;
};
RawDataset make_toy_series(const ToySeriesOptions& options);

}  // namespace edformer::data
