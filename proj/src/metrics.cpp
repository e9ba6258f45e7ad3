#include "edformer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <tuple>

#include "edformer/error.hpp"
#include "edformer/format.hpp"

namespace edformer::metrics {

namespace {

void check_sizes(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw ShapeError("metric inputs differ in size: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(truth.size()));
    }
    if (pred.empty()) throw ShapeError("metric inputs are empty");
}

void check_shapes(const engine::Tensor& pred, const engine::Tensor& truth) {
    if (pred.shape() != truth.shape()) {
        throw ShapeError("metric shapes differ: " + engine::shape_string(pred.shape()) + " vs " +
                         engine::shape_string(truth.shape()));
    }
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
    check_sizes(pred, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_sizes(pred, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

double mse(const engine::Tensor& pred, const engine::Tensor& truth) {
    check_shapes(pred, truth);
    return mse(pred.data(), truth.data());
}

double mae(const engine::Tensor& pred, const engine::Tensor& truth) {
    check_shapes(pred, truth);
    return mae(pred.data(), truth.data());
}

RunSummary summarize_horizons(std::span<const HorizonResult> results) {
    if (results.empty()) throw ConfigError("summarize_horizons needs at least one result");
    RunSummary s;
    s.horizons.assign(results.begin(), results.end());
    // Sorting fixes the summation order, so the summary ignores input order.
    std::sort(s.horizons.begin(), s.horizons.end(), [](const HorizonResult& a, const HorizonResult& b) {
        return std::tie(a.horizon, a.mse, a.mae) < std::tie(b.horizon, b.mse, b.mae);
    });
    const double n = static_cast<double>(s.horizons.size());
    for (const auto& r : s.horizons) {
        s.mean_mse += r.mse;
        s.mean_mae += r.mae;
    }
    s.mean_mse /= n;
    s.mean_mae /= n;
    for (const auto& r : s.horizons) {
        s.std_mse += (r.mse - s.mean_mse) * (r.mse - s.mean_mse);
        s.std_mae += (r.mae - s.mean_mae) * (r.mae - s.mean_mae);
    }
    s.std_mse = std::sqrt(s.std_mse / n);
    s.std_mae = std::sqrt(s.std_mae / n);
    return s;
}

void write_report_csv(std::ostream& out, const std::string& dataset, const RunSummary& summary) {
    out << "dataset,horizon,mse,mae\n";
    for (const auto& r : summary.horizons) {
        out << dataset << ',' << r.horizon << ',' << format_number(r.mse) << ',' << format_number(r.mae) << '\n';
    }
    out << dataset << ",mean," << format_number(summary.mean_mse) << ',' << format_number(summary.mean_mae) << '\n';
    out << dataset << ",std," << format_number(summary.std_mse) << ',' << format_number(summary.std_mae) << '\n';
}

}  // namespace edformer::metrics
