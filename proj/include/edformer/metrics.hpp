#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "edformer/engine/tensor.hpp"

namespace edformer::metrics {

double mse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);
double mse(const engine::Tensor& pred, const engine::Tensor& truth);
double mae(const engine::Tensor& pred, const engine::Tensor& truth);

struct HorizonResult {
    std::size_t horizon = 0;
    double mse = 0.0;
    double mae = 0.0;
};

struct RunSummary {
    std::vector<HorizonResult> horizons;  // sorted by horizon
    double mean_mse = 0.0;
    double mean_mae = 0.0;
    double std_mse = 0.0;  // population standard deviation
    double std_mae = 0.0;
};

RunSummary summarize_horizons(std::span<const HorizonResult> results);

// Columns dataset,horizon,mse,mae; one row per horizon followed by `mean`
// and `std` aggregate rows.
void write_report_csv(std::ostream& out, const std::string& dataset, const RunSummary& summary);

}  // namespace edformer::metrics
